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

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tracekit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed wire data. `offset` is the byte position where decoding failed.
class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// API misuse: closed context, empty key, double close.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A response whose header does not match any request issued by the context.
class CorrelationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// A duration computed on a single clock came out negative.
class ClockAnomalyError : public Error {
 public:
  ClockAnomalyError(const std::string& what, std::int64_t earlier_us,
                    std::int64_t later_us)
      : Error(what + " (" + std::to_string(earlier_us) + "us > " +
              std::to_string(later_us) + "us)"),
        earlier_us_(earlier_us),
        later_us_(later_us) {}
  std::int64_t earlier_us() const { return earlier_us_; }
  std::int64_t later_us() const { return later_us_; }

 private:
  std::int64_t earlier_us_;
  std::int64_t later_us_;
};

/// Two timestamps from different clocks were compared.
class ClockMismatchError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or domain input (scenario, topology, thresholds).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Template corpus inconsistency, e.g. two patterns matching one line.
class CorpusError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class BindingError : public Error {
 public:
  explicit BindingError(std::vector<std::string> missing)
      : Error(describe(missing)), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  static std::string describe(const std::vector<std::string>& names) {
    std::string s = "unknown procedures:";
    for (const auto& n : names) s += " " + n;
    return s;
  }
  std::vector<std::string> missing_;
};

}  // namespace tracekit
