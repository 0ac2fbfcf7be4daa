// Copyright 2026 The tracekit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Syslog lines and template matching.
//
// Lines are RFC3164-style: "<pri>Mmm dd hh:mm:ss[.ffffff] host message".
// The year is not on the wire and is supplied by the caller. Times are
// micros since the epoch on the "wall" clock.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "tracekit/model.h"

namespace tracekit {

inline constexpr std::string_view kWallClock = "wall";

/// Throws DecodeError (with byte offset) on malformed lines.
SyslogMessage parse_syslog_line(std::string_view line, int year = 1970);

/// Inverse of parse_syslog_line for messages on the wall clock. Facility
/// is local7.
std::string format_syslog_line(const SyslogMessage& msg);

class TemplateCorpus {
 public:
  TemplateCorpus() = default;
  /// Compiles every pattern and checks that each example matches its own
  /// template and no other. Throws CorpusError otherwise.
  explicit TemplateCorpus(std::vector<Template> templates);

  /// Reads a JSONL file of template records.
  static TemplateCorpus load(const std::filesystem::path& file);

  const std::vector<Template>& templates() const { return templates_; }
  const Template* find(const std::string& template_id) const;

  /// Sets template_id and capture attributes on a match. Returns false
  /// (leaving `msg` untouched) when no template matches.
  bool match(SyslogMessage& msg) const;

 private:
  struct Compiled {
    std::regex re;
    std::string literal;  // required substring, may be empty
  };
  std::optional<std::size_t> first_match(const std::string& body, std::smatch* m) const;

  std::vector<Template> templates_;
  std::vector<Compiled> compiled_;
};

/// Longest run of literal characters that every match must contain, or ""
/// when the pattern has top-level alternation.
std::string required_literal(std::string_view pattern);

}  // namespace tracekit
