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

// Shared domain types. Everything here is a plain value type; once built,
// instances are not mutated by the library and may be shared across threads.

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tracekit {

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Time

/// Integer microseconds on a node-local clock.
///
/// Timestamps from different clocks must not be compared. Use elapsed_us()
/// for differences; it throws ClockMismatchError on mixed clocks.
struct Timestamp {
  std::int64_t micros = 0;
  std::string clock_id;

  bool operator==(const Timestamp&) const = default;
};

/// `to - from` in microseconds; both must carry the same clock_id.
std::int64_t elapsed_us(const Timestamp& from, const Timestamp& to);

// ---------------------------------------------------------------------------
// Identifiers

struct SessionId {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  auto operator<=>(const SessionId&) const = default;
  bool operator==(const SessionId&) const = default;

  /// 32 lowercase hex digits.
  std::string hex() const;
  /// Inverse of hex(); throws DecodeError.
  static SessionId from_hex(std::string_view s);
};

using RpcId = std::uint64_t;

/// Parent of a session's root RPC. rpc_id 0 is never issued.
inline constexpr RpcId kRootParent = 0;

std::string rpc_hex(RpcId id);

struct TraceHeader {
  SessionId session_id;
  RpcId rpc_id = 0;
  RpcId parent_rpc_id = kRootParent;

  bool operator==(const TraceHeader&) const = default;
};

// Node identifiers are "service@host"; a host may carry a datacenter suffix
// "name.dc". Nodes without '@' name both the service and the host.
std::string service_of(std::string_view node);
std::string host_of(std::string_view node);
std::string datacenter_of(std::string_view host);

// ---------------------------------------------------------------------------
// Trace records

enum class Direction { kRequestOut, kRequestIn, kResponseOut, kResponseIn };

std::string_view to_string(Direction d);
std::optional<Direction> direction_from_string(std::string_view s);

/// One directed message of an RPC as observed at `node`.
struct RpcEdgeRecord {
  SessionId session_id;
  RpcId rpc_id = 0;
  RpcId parent_rpc_id = kRootParent;
  std::string node;
  std::string peer;
  Direction direction = Direction::kRequestOut;
  Timestamp first_byte;
  Timestamp last_byte;
  std::int64_t payload_bytes = 0;

  bool operator==(const RpcEdgeRecord&) const = default;
};

struct AnnotationRecord {
  SessionId session_id;
  RpcId rpc_id = 0;
  std::string node;
  std::string key;
  std::string value;
  Timestamp at;

  bool operator==(const AnnotationRecord&) const = default;
};

struct NavEvent {
  std::string name;
  Timestamp start;
  Timestamp end;

  bool operator==(const NavEvent&) const = default;
};

/// User-side page timeline. Navigation start is the first event's start.
struct NavTimingRecord {
  SessionId session_id;
  std::vector<NavEvent> events;
  double onload_ms = 0.0;

  bool operator==(const NavTimingRecord&) const = default;
};

/// Periodic snapshot of kernel TCP statistics at the serving host.
struct TcpSnapshot {
  SessionId session_id;
  std::string connection_id;
  Timestamp at;
  std::int64_t srtt_us = 0;
  std::int64_t rttvar_us = 0;
  std::int64_t rto_us = 0;
  std::int64_t retrans_segments = 0;
  std::int64_t reordering_events = 0;
  std::int64_t cwnd_segments = 0;
  std::int64_t send_window_bytes = 0;
  std::int64_t recv_window_bytes = 0;

  bool operator==(const TcpSnapshot&) const = default;
};

struct SessionTrace {
  SessionId session_id;
  std::vector<RpcEdgeRecord> edges;
  std::vector<AnnotationRecord> annotations;
  std::optional<NavTimingRecord> navtiming;
  std::vector<TcpSnapshot> tcp_snapshots;
  bool assembled_complete = false;

  bool operator==(const SessionTrace&) const = default;
};

// ---------------------------------------------------------------------------
// Network records

enum class Layer { kPhy, kL2, kL3, kL4, kRouting, kHardware };

std::string_view to_string(Layer l);
std::optional<Layer> layer_from_string(std::string_view s);

struct SyslogMessage {
  std::string device;
  Timestamp at;
  int severity = 6;
  std::string raw;
  std::optional<std::string> template_id;
  std::map<std::string, std::string> attrs;

  bool operator==(const SyslogMessage&) const = default;
};

struct Template {
  std::string template_id;
  /// ECMAScript regex matched against the whole message body.
  std::string pattern;
  Layer layer = Layer::kL2;
  std::string equivalence_class;
  /// Names for the pattern's capture groups, in order.
  std::vector<std::string> captures;
  /// Sample lines; used to check mutual exclusivity when a corpus loads.
  std::vector<std::string> examples;

  bool operator==(const Template&) const = default;
};

enum class RuleScope { kIntraDevice, kInterDevice };

std::string_view to_string(RuleScope s);
std::optional<RuleScope> scope_from_string(std::string_view s);

struct CausalRule {
  std::string cause;
  std::string effect;
  RuleScope scope = RuleScope::kIntraDevice;
  /// Likelihood-ratio (G) statistic of the treated/untreated table.
  double score = 0.0;
  std::int64_t support = 0;

  bool operator==(const CausalRule&) const = default;
};

struct ProblemNode {
  std::string device;
  std::string template_id;
  std::int64_t first_at_us = 0;
  std::int64_t last_at_us = 0;
  int severity = 6;

  bool operator==(const ProblemNode&) const = default;
};

struct ProblemEdge {
  std::size_t from = 0;  // index into ProblemGraph::nodes
  std::size_t to = 0;
  std::size_t rule = 0;  // index into the rule corpus used for mining
  std::string label;     // "cause->effect"

  bool operator==(const ProblemEdge&) const = default;
};

/// A DAG of template instances within a mining window.
struct ProblemGraph {
  std::vector<ProblemNode> nodes;
  std::vector<ProblemEdge> edges;
  std::int64_t window_start_us = 0;
  std::int64_t window_end_us = 0;

  bool operator==(const ProblemGraph&) const = default;
};

enum class Tier { kToR, kAgg, kCore, kMiddlebox };

std::string_view to_string(Tier t);
std::optional<Tier> tier_from_string(std::string_view s);

struct Device {
  std::string device_id;
  Tier tier = Tier::kToR;

  bool operator==(const Device&) const = default;
};

struct TopologySnapshot {
  std::vector<Device> devices;
  std::vector<std::pair<std::string, std::string>> links;
  std::map<std::string, std::string> host_attachments;  // host -> ToR
  Timestamp taken_at;

  bool operator==(const TopologySnapshot&) const = default;
};

// ---------------------------------------------------------------------------
// Diagnosis output

enum class Verdict { kNormal, kHigh, kLow, kInsufficientData };

std::string_view to_string(Verdict v);
std::optional<Verdict> verdict_from_string(std::string_view s);

struct Detection {
  Verdict verdict = Verdict::kInsufficientData;
  std::string method = "iqr_fence";
  double e2e_ms = 0.0;
  std::string e2e_source;  // "navtiming" or "root_round_trip"
  std::vector<std::string> baseline_key;
  double q1 = 0.0;
  double q3 = 0.0;
  double k = 0.0;
  std::size_t samples = 0;

  bool operator==(const Detection&) const = default;
};

enum class SegmentKind { kCompute, kNetwork };

std::string_view to_string(SegmentKind k);

struct PathSegment {
  SegmentKind kind = SegmentKind::kCompute;
  /// Compute: the service instance. Network: "caller->callee" or the node
  /// whose edge (de)serialization is measured.
  std::string node;
  RpcId rpc_id = 0;
  std::int64_t duration_us = 0;

  bool operator==(const PathSegment&) const = default;
};

struct CriticalPath {
  std::vector<PathSegment> segments;
  std::int64_t total_latency_us = 0;
  bool partial = false;
  std::vector<std::string> notes;

  bool operator==(const CriticalPath&) const = default;
};

struct Contribution {
  std::string service;
  std::int64_t latency_us = 0;
  double fraction = 0.0;

  bool operator==(const Contribution&) const = default;
};

struct ContentFinding {
  std::string event;
  double latency_ms = 0.0;
  double fraction = 0.0;
  bool significant = false;

  bool operator==(const ContentFinding&) const = default;
};

struct ProblemGraphSummary {
  std::size_t graph_id = 0;
  std::string root_device;
  std::string root_template;
  std::string tier;
  std::vector<std::string> devices;
  std::size_t node_count = 0;
  std::int64_t window_start_us = 0;
  std::int64_t window_end_us = 0;
  std::string label = "possible";

  bool operator==(const ProblemGraphSummary&) const = default;
};

struct NetworkFinding {
  RpcId rpc_id = 0;
  std::string caller;
  std::string callee;
  std::optional<std::int64_t> queueing_delay_us;
  bool flagged = false;
  bool on_critical_path = false;
  std::vector<std::string> candidate_devices;
  std::vector<ProblemGraphSummary> possible_problems;

  bool operator==(const NetworkFinding&) const = default;
};

enum class Bottleneck { kInternet, kCdnBackend };

std::string_view to_string(Bottleneck b);
std::optional<Bottleneck> bottleneck_from_string(std::string_view s);

struct InternetFinding {
  RpcId rpc_id = 0;
  std::string connection_id;
  Bottleneck bottleneck = Bottleneck::kInternet;
  std::string rule = "component_comparison";
  double rtt_variation = 0.0;
  std::int64_t delta_fb_us = 0;
  std::int64_t delta_cdn_us = 0;
  std::int64_t delta_be_us = 0;
  std::int64_t delta_rto_us = 0;
  std::int64_t retrans_segments = 0;
  bool cache_hit = true;
  std::int64_t download_stack_bound_us = 0;

  bool operator==(const InternetFinding&) const = default;
};

struct DiagnosisReport {
  SessionId session_id;
  int revision = 0;
  bool deferred = false;
  std::string defer_reason;
  std::int64_t start_us = 0;  // root request arrival, origin node clock
  Detection detection;
  CriticalPath critical_path;
  std::vector<Contribution> contributions;
  std::vector<ContentFinding> content_findings;
  std::vector<NetworkFinding> network_findings;
  std::vector<InternetFinding> internet_findings;
  std::map<std::string, std::string> symptoms;  // name -> true/false/unknown
  std::vector<std::string> pathologies;
  std::vector<std::string> notes;

  bool operator==(const DiagnosisReport&) const = default;
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string kind;    // e.g. "dangling parent", "timestamp order"
  std::string field;
  std::string record;  // human-readable record locator

  bool operator==(const Violation&) const = default;
};

/// Checks the type invariants of an assembled trace. Violations are sorted so
/// the result does not depend on record order.
std::vector<Violation> validate_trace(const SessionTrace& trace);

}  // namespace tracekit
