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

// Canonical JSON Lines encoding of the model types. Each line is one object
// carrying "v" (format version) and "type"; the remaining keys are the
// type's field names. 64-bit identifiers travel as fixed-width hex strings.
// See docs/formats.md.

#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"
#include "tracekit/model.h"

namespace tracekit {

using Json = nlohmann::json;

void to_json(Json& j, const Timestamp& v);
void from_json(const Json& j, Timestamp& v);
void to_json(Json& j, const SessionId& v);
void from_json(const Json& j, SessionId& v);
void to_json(Json& j, const TraceHeader& v);
void from_json(const Json& j, TraceHeader& v);
void to_json(Json& j, const RpcEdgeRecord& v);
void from_json(const Json& j, RpcEdgeRecord& v);
void to_json(Json& j, const AnnotationRecord& v);
void from_json(const Json& j, AnnotationRecord& v);
void to_json(Json& j, const NavEvent& v);
void from_json(const Json& j, NavEvent& v);
void to_json(Json& j, const NavTimingRecord& v);
void from_json(const Json& j, NavTimingRecord& v);
void to_json(Json& j, const TcpSnapshot& v);
void from_json(const Json& j, TcpSnapshot& v);
void to_json(Json& j, const SessionTrace& v);
void from_json(const Json& j, SessionTrace& v);
void to_json(Json& j, const SyslogMessage& v);
void from_json(const Json& j, SyslogMessage& v);
void to_json(Json& j, const Template& v);
void from_json(const Json& j, Template& v);
void to_json(Json& j, const CausalRule& v);
void from_json(const Json& j, CausalRule& v);
void to_json(Json& j, const ProblemNode& v);
void from_json(const Json& j, ProblemNode& v);
void to_json(Json& j, const ProblemEdge& v);
void from_json(const Json& j, ProblemEdge& v);
void to_json(Json& j, const ProblemGraph& v);
void from_json(const Json& j, ProblemGraph& v);
void to_json(Json& j, const Device& v);
void from_json(const Json& j, Device& v);
void to_json(Json& j, const TopologySnapshot& v);
void from_json(const Json& j, TopologySnapshot& v);
void to_json(Json& j, const Detection& v);
void from_json(const Json& j, Detection& v);
void to_json(Json& j, const PathSegment& v);
void from_json(const Json& j, PathSegment& v);
void to_json(Json& j, const CriticalPath& v);
void from_json(const Json& j, CriticalPath& v);
void to_json(Json& j, const Contribution& v);
void from_json(const Json& j, Contribution& v);
void to_json(Json& j, const ContentFinding& v);
void from_json(const Json& j, ContentFinding& v);
void to_json(Json& j, const ProblemGraphSummary& v);
void from_json(const Json& j, ProblemGraphSummary& v);
void to_json(Json& j, const NetworkFinding& v);
void from_json(const Json& j, NetworkFinding& v);
void to_json(Json& j, const InternetFinding& v);
void from_json(const Json& j, InternetFinding& v);
void to_json(Json& j, const DiagnosisReport& v);
void from_json(const Json& j, DiagnosisReport& v);

/// Type tag written into each JSONL line.
template <typename T>
constexpr std::string_view type_tag();
template <> constexpr std::string_view type_tag<TraceHeader>() { return "header"; }
template <> constexpr std::string_view type_tag<RpcEdgeRecord>() { return "edge"; }
template <> constexpr std::string_view type_tag<AnnotationRecord>() { return "annotation"; }
template <> constexpr std::string_view type_tag<NavTimingRecord>() { return "navtiming"; }
template <> constexpr std::string_view type_tag<TcpSnapshot>() { return "tcp"; }
template <> constexpr std::string_view type_tag<SessionTrace>() { return "trace"; }
template <> constexpr std::string_view type_tag<SyslogMessage>() { return "syslog"; }
template <> constexpr std::string_view type_tag<Template>() { return "template"; }
template <> constexpr std::string_view type_tag<CausalRule>() { return "rule"; }
template <> constexpr std::string_view type_tag<ProblemGraph>() { return "problem_graph"; }
template <> constexpr std::string_view type_tag<TopologySnapshot>() { return "topology"; }
template <> constexpr std::string_view type_tag<DiagnosisReport>() { return "report"; }

/// One JSONL line (no trailing newline).
template <typename T>
std::string to_jsonl(const T& value) {
  Json j = value;
  j["type"] = type_tag<T>();
  j["v"] = kFormatVersion;
  return j.dump();
}

/// Parses one line produced by to_jsonl<T>. Throws DecodeError on malformed
/// JSON, a wrong type tag or missing fields.
template <typename T>
T from_jsonl(std::string_view line);

/// Records that belong to a session and flow through ingest.
using SessionRecord =
    std::variant<RpcEdgeRecord, AnnotationRecord, NavTimingRecord, TcpSnapshot>;

std::string encode_session_record(const SessionRecord& r);
/// Dispatches on the "type" tag. Throws DecodeError.
SessionRecord decode_session_record(std::string_view line);

const SessionId& session_of(const SessionRecord& r);

}  // namespace tracekit
