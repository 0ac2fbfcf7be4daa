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

#include "tracekit/codec.h"

#include "tracekit/errors.h"

namespace tracekit {

namespace {

RpcId rpc_from(const Json& j) {
  const auto& s = j.get_ref<const std::string&>();
  if (s.size() != 16) throw DecodeError("rpc id must be 16 hex digits", 0);
  RpcId v = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    int d = (c >= '0' && c <= '9') ? c - '0' : (c >= 'a' && c <= 'f') ? c - 'a' + 10 : -1;
    if (d < 0) throw DecodeError("non-hex digit in rpc id", i);
    v = (v << 4) | static_cast<RpcId>(d);
  }
  return v;
}

template <typename E, typename F>
E enum_from(const Json& j, F parse, const char* what) {
  auto v = parse(j.get_ref<const std::string&>());
  if (!v) throw DecodeError(std::string("unknown ") + what + " '" + j.get<std::string>() + "'", 0);
  return *v;
}

}  // namespace

void to_json(Json& j, const Timestamp& v) {
  j = Json{{"micros", v.micros}, {"clock_id", v.clock_id}};
}
void from_json(const Json& j, Timestamp& v) {
  j.at("micros").get_to(v.micros);
  j.at("clock_id").get_to(v.clock_id);
}

void to_json(Json& j, const SessionId& v) { j = v.hex(); }
void from_json(const Json& j, SessionId& v) {
  v = SessionId::from_hex(j.get_ref<const std::string&>());
}

void to_json(Json& j, const TraceHeader& v) {
  j = Json{{"session_id", v.session_id},
           {"rpc_id", rpc_hex(v.rpc_id)},
           {"parent_rpc_id", rpc_hex(v.parent_rpc_id)}};
}
void from_json(const Json& j, TraceHeader& v) {
  j.at("session_id").get_to(v.session_id);
  v.rpc_id = rpc_from(j.at("rpc_id"));
  v.parent_rpc_id = rpc_from(j.at("parent_rpc_id"));
}

void to_json(Json& j, const RpcEdgeRecord& v) {
  j = Json{{"session_id", v.session_id},
           {"rpc_id", rpc_hex(v.rpc_id)},
           {"parent_rpc_id", rpc_hex(v.parent_rpc_id)},
           {"node", v.node},
           {"peer", v.peer},
           {"direction", to_string(v.direction)},
           {"first_byte", v.first_byte},
           {"last_byte", v.last_byte},
           {"payload_bytes", v.payload_bytes}};
}
void from_json(const Json& j, RpcEdgeRecord& v) {
  j.at("session_id").get_to(v.session_id);
  v.rpc_id = rpc_from(j.at("rpc_id"));
  v.parent_rpc_id = rpc_from(j.at("parent_rpc_id"));
  j.at("node").get_to(v.node);
  j.at("peer").get_to(v.peer);
  v.direction = enum_from<Direction>(j.at("direction"), direction_from_string, "direction");
  j.at("first_byte").get_to(v.first_byte);
  j.at("last_byte").get_to(v.last_byte);
  j.at("payload_bytes").get_to(v.payload_bytes);
}

void to_json(Json& j, const AnnotationRecord& v) {
  j = Json{{"session_id", v.session_id}, {"rpc_id", rpc_hex(v.rpc_id)},
           {"node", v.node},             {"key", v.key},
           {"value", v.value},           {"at", v.at}};
}
void from_json(const Json& j, AnnotationRecord& v) {
  j.at("session_id").get_to(v.session_id);
  v.rpc_id = rpc_from(j.at("rpc_id"));
  j.at("node").get_to(v.node);
  j.at("key").get_to(v.key);
  j.at("value").get_to(v.value);
  j.at("at").get_to(v.at);
}

void to_json(Json& j, const NavEvent& v) {
  j = Json{{"event_name", v.name}, {"start", v.start}, {"end", v.end}};
}
void from_json(const Json& j, NavEvent& v) {
  j.at("event_name").get_to(v.name);
  j.at("start").get_to(v.start);
  j.at("end").get_to(v.end);
}

void to_json(Json& j, const NavTimingRecord& v) {
  j = Json{{"session_id", v.session_id}, {"events", v.events}, {"onload_ms", v.onload_ms}};
}
void from_json(const Json& j, NavTimingRecord& v) {
  j.at("session_id").get_to(v.session_id);
  j.at("events").get_to(v.events);
  j.at("onload_ms").get_to(v.onload_ms);
}

void to_json(Json& j, const TcpSnapshot& v) {
  j = Json{{"session_id", v.session_id},
           {"connection_id", v.connection_id},
           {"at", v.at},
           {"srtt_us", v.srtt_us},
           {"rttvar_us", v.rttvar_us},
           {"rto_us", v.rto_us},
           {"retrans_segments", v.retrans_segments},
           {"reordering_events", v.reordering_events},
           {"cwnd_segments", v.cwnd_segments},
           {"send_window_bytes", v.send_window_bytes},
           {"recv_window_bytes", v.recv_window_bytes}};
}
void from_json(const Json& j, TcpSnapshot& v) {
  j.at("session_id").get_to(v.session_id);
  j.at("connection_id").get_to(v.connection_id);
  j.at("at").get_to(v.at);
  j.at("srtt_us").get_to(v.srtt_us);
  j.at("rttvar_us").get_to(v.rttvar_us);
  j.at("rto_us").get_to(v.rto_us);
  j.at("retrans_segments").get_to(v.retrans_segments);
  j.at("reordering_events").get_to(v.reordering_events);
  j.at("cwnd_segments").get_to(v.cwnd_segments);
  j.at("send_window_bytes").get_to(v.send_window_bytes);
  j.at("recv_window_bytes").get_to(v.recv_window_bytes);
}

void to_json(Json& j, const SessionTrace& v) {
  j = Json{{"session_id", v.session_id},
           {"edges", v.edges},
           {"annotations", v.annotations},
           {"navtiming", v.navtiming ? Json(*v.navtiming) : Json(nullptr)},
           {"tcp_snapshots", v.tcp_snapshots},
           {"assembled_complete", v.assembled_complete}};
}
void from_json(const Json& j, SessionTrace& v) {
  j.at("session_id").get_to(v.session_id);
  j.at("edges").get_to(v.edges);
  j.at("annotations").get_to(v.annotations);
  const auto& nav = j.at("navtiming");
  if (nav.is_null()) {
    v.navtiming.reset();
  } else {
    v.navtiming = nav.get<NavTimingRecord>();
  }
  j.at("tcp_snapshots").get_to(v.tcp_snapshots);
  j.at("assembled_complete").get_to(v.assembled_complete);
}

void to_json(Json& j, const SyslogMessage& v) {
  j = Json{{"device", v.device},
           {"at", v.at},
           {"severity", v.severity},
           {"raw", v.raw},
           {"template_id", v.template_id ? Json(*v.template_id) : Json(nullptr)},
           {"attrs", v.attrs}};
}
void from_json(const Json& j, SyslogMessage& v) {
  j.at("device").get_to(v.device);
  j.at("at").get_to(v.at);
  j.at("severity").get_to(v.severity);
  j.at("raw").get_to(v.raw);
  const auto& t = j.at("template_id");
  if (t.is_null()) {
    v.template_id.reset();
  } else {
    v.template_id = t.get<std::string>();
  }
  j.at("attrs").get_to(v.attrs);
}

void to_json(Json& j, const Template& v) {
  j = Json{{"template_id", v.template_id},
           {"pattern", v.pattern},
           {"layer", to_string(v.layer)},
           {"equivalence_class", v.equivalence_class},
           {"captures", v.captures},
           {"examples", v.examples}};
}
void from_json(const Json& j, Template& v) {
  j.at("template_id").get_to(v.template_id);
  j.at("pattern").get_to(v.pattern);
  v.layer = enum_from<Layer>(j.at("layer"), layer_from_string, "layer");
  j.at("equivalence_class").get_to(v.equivalence_class);
  v.captures = j.value("captures", std::vector<std::string>{});
  v.examples = j.value("examples", std::vector<std::string>{});
}

void to_json(Json& j, const CausalRule& v) {
  j = Json{{"cause", v.cause},
           {"effect", v.effect},
           {"scope", to_string(v.scope)},
           {"score", v.score},
           {"support", v.support}};
}
void from_json(const Json& j, CausalRule& v) {
  j.at("cause").get_to(v.cause);
  j.at("effect").get_to(v.effect);
  v.scope = enum_from<RuleScope>(j.at("scope"), scope_from_string, "scope");
  j.at("score").get_to(v.score);
  j.at("support").get_to(v.support);
}

void to_json(Json& j, const ProblemNode& v) {
  j = Json{{"device", v.device},
           {"template_id", v.template_id},
           {"first_at", v.first_at_us},
           {"last_at", v.last_at_us},
           {"severity", v.severity}};
}
void from_json(const Json& j, ProblemNode& v) {
  j.at("device").get_to(v.device);
  j.at("template_id").get_to(v.template_id);
  j.at("first_at").get_to(v.first_at_us);
  j.at("last_at").get_to(v.last_at_us);
  j.at("severity").get_to(v.severity);
}

void to_json(Json& j, const ProblemEdge& v) {
  j = Json{{"from", v.from}, {"to", v.to}, {"rule", v.rule}, {"label", v.label}};
}
void from_json(const Json& j, ProblemEdge& v) {
  j.at("from").get_to(v.from);
  j.at("to").get_to(v.to);
  j.at("rule").get_to(v.rule);
  j.at("label").get_to(v.label);
}

void to_json(Json& j, const ProblemGraph& v) {
  j = Json{{"nodes", v.nodes},
           {"edges", v.edges},
           {"window", Json::array({v.window_start_us, v.window_end_us})}};
}
void from_json(const Json& j, ProblemGraph& v) {
  j.at("nodes").get_to(v.nodes);
  j.at("edges").get_to(v.edges);
  const auto& w = j.at("window");
  w.at(0).get_to(v.window_start_us);
  w.at(1).get_to(v.window_end_us);
}

void to_json(Json& j, const Device& v) {
  j = Json{{"device_id", v.device_id}, {"tier", to_string(v.tier)}};
}
void from_json(const Json& j, Device& v) {
  j.at("device_id").get_to(v.device_id);
  v.tier = enum_from<Tier>(j.at("tier"), tier_from_string, "tier");
}

void to_json(Json& j, const TopologySnapshot& v) {
  Json links = Json::array();
  for (const auto& [a, b] : v.links) links.push_back(Json::array({a, b}));
  j = Json{{"devices", v.devices},
           {"links", links},
           {"host_attachments", v.host_attachments},
           {"taken_at", v.taken_at}};
}
void from_json(const Json& j, TopologySnapshot& v) {
  j.at("devices").get_to(v.devices);
  v.links.clear();
  for (const auto& l : j.at("links")) {
    v.links.emplace_back(l.at(0).get<std::string>(), l.at(1).get<std::string>());
  }
  j.at("host_attachments").get_to(v.host_attachments);
  j.at("taken_at").get_to(v.taken_at);
}

void to_json(Json& j, const Detection& v) {
  j = Json{{"verdict", to_string(v.verdict)},
           {"method", v.method},
           {"e2e_ms", v.e2e_ms},
           {"e2e_source", v.e2e_source},
           {"baseline_key", v.baseline_key},
           {"q1", v.q1},
           {"q3", v.q3},
           {"k", v.k},
           {"samples", v.samples}};
}
void from_json(const Json& j, Detection& v) {
  v.verdict = enum_from<Verdict>(j.at("verdict"), verdict_from_string, "verdict");
  j.at("method").get_to(v.method);
  j.at("e2e_ms").get_to(v.e2e_ms);
  j.at("e2e_source").get_to(v.e2e_source);
  j.at("baseline_key").get_to(v.baseline_key);
  j.at("q1").get_to(v.q1);
  j.at("q3").get_to(v.q3);
  j.at("k").get_to(v.k);
  j.at("samples").get_to(v.samples);
}

void to_json(Json& j, const PathSegment& v) {
  j = Json{{"kind", to_string(v.kind)},
           {"node", v.node},
           {"rpc_id", rpc_hex(v.rpc_id)},
           {"duration_us", v.duration_us}};
}
void from_json(const Json& j, PathSegment& v) {
  const auto& k = j.at("kind").get_ref<const std::string&>();
  if (k == "compute") {
    v.kind = SegmentKind::kCompute;
  } else if (k == "network") {
    v.kind = SegmentKind::kNetwork;
  } else {
    throw DecodeError("unknown segment kind '" + k + "'", 0);
  }
  j.at("node").get_to(v.node);
  v.rpc_id = rpc_from(j.at("rpc_id"));
  j.at("duration_us").get_to(v.duration_us);
}

void to_json(Json& j, const CriticalPath& v) {
  j = Json{{"segments", v.segments},
           {"total_latency_us", v.total_latency_us},
           {"partial", v.partial},
           {"notes", v.notes}};
}
void from_json(const Json& j, CriticalPath& v) {
  j.at("segments").get_to(v.segments);
  j.at("total_latency_us").get_to(v.total_latency_us);
  j.at("partial").get_to(v.partial);
  j.at("notes").get_to(v.notes);
}

void to_json(Json& j, const Contribution& v) {
  j = Json{{"service", v.service}, {"latency_us", v.latency_us}, {"fraction", v.fraction}};
}
void from_json(const Json& j, Contribution& v) {
  j.at("service").get_to(v.service);
  j.at("latency_us").get_to(v.latency_us);
  j.at("fraction").get_to(v.fraction);
}

void to_json(Json& j, const ContentFinding& v) {
  j = Json{{"event", v.event},
           {"latency_ms", v.latency_ms},
           {"fraction", v.fraction},
           {"significant", v.significant}};
}
void from_json(const Json& j, ContentFinding& v) {
  j.at("event").get_to(v.event);
  j.at("latency_ms").get_to(v.latency_ms);
  j.at("fraction").get_to(v.fraction);
  j.at("significant").get_to(v.significant);
}

void to_json(Json& j, const ProblemGraphSummary& v) {
  j = Json{{"graph_id", v.graph_id},
           {"root_device", v.root_device},
           {"root_template", v.root_template},
           {"tier", v.tier},
           {"devices", v.devices},
           {"node_count", v.node_count},
           {"window", Json::array({v.window_start_us, v.window_end_us})},
           {"label", v.label}};
}
void from_json(const Json& j, ProblemGraphSummary& v) {
  j.at("graph_id").get_to(v.graph_id);
  j.at("root_device").get_to(v.root_device);
  j.at("root_template").get_to(v.root_template);
  j.at("tier").get_to(v.tier);
  j.at("devices").get_to(v.devices);
  j.at("node_count").get_to(v.node_count);
  const auto& w = j.at("window");
  w.at(0).get_to(v.window_start_us);
  w.at(1).get_to(v.window_end_us);
  j.at("label").get_to(v.label);
}

void to_json(Json& j, const NetworkFinding& v) {
  j = Json{{"rpc_id", rpc_hex(v.rpc_id)},
           {"caller", v.caller},
           {"callee", v.callee},
           {"queueing_delay_us", v.queueing_delay_us ? Json(*v.queueing_delay_us) : Json(nullptr)},
           {"flagged", v.flagged},
           {"on_critical_path", v.on_critical_path},
           {"candidate_devices", v.candidate_devices},
           {"possible_problems", v.possible_problems}};
}
void from_json(const Json& j, NetworkFinding& v) {
  v.rpc_id = rpc_from(j.at("rpc_id"));
  j.at("caller").get_to(v.caller);
  j.at("callee").get_to(v.callee);
  const auto& q = j.at("queueing_delay_us");
  if (q.is_null()) {
    v.queueing_delay_us.reset();
  } else {
    v.queueing_delay_us = q.get<std::int64_t>();
  }
  j.at("flagged").get_to(v.flagged);
  j.at("on_critical_path").get_to(v.on_critical_path);
  j.at("candidate_devices").get_to(v.candidate_devices);
  j.at("possible_problems").get_to(v.possible_problems);
}

void to_json(Json& j, const InternetFinding& v) {
  j = Json{{"rpc_id", rpc_hex(v.rpc_id)},
           {"connection_id", v.connection_id},
           {"bottleneck", to_string(v.bottleneck)},
           {"rule", v.rule},
           {"rtt_variation", v.rtt_variation},
           {"delta_fb_us", v.delta_fb_us},
           {"delta_cdn_us", v.delta_cdn_us},
           {"delta_be_us", v.delta_be_us},
           {"delta_rto_us", v.delta_rto_us},
           {"retrans_segments", v.retrans_segments},
           {"cache_hit", v.cache_hit},
           {"download_stack_bound_us", v.download_stack_bound_us}};
}
void from_json(const Json& j, InternetFinding& v) {
  v.rpc_id = rpc_from(j.at("rpc_id"));
  j.at("connection_id").get_to(v.connection_id);
  v.bottleneck = enum_from<Bottleneck>(j.at("bottleneck"), bottleneck_from_string, "bottleneck");
  j.at("rule").get_to(v.rule);
  j.at("rtt_variation").get_to(v.rtt_variation);
  j.at("delta_fb_us").get_to(v.delta_fb_us);
  j.at("delta_cdn_us").get_to(v.delta_cdn_us);
  j.at("delta_be_us").get_to(v.delta_be_us);
  j.at("delta_rto_us").get_to(v.delta_rto_us);
  j.at("retrans_segments").get_to(v.retrans_segments);
  j.at("cache_hit").get_to(v.cache_hit);
  j.at("download_stack_bound_us").get_to(v.download_stack_bound_us);
}

void to_json(Json& j, const DiagnosisReport& v) {
  j = Json{{"session_id", v.session_id},
           {"revision", v.revision},
           {"deferred", v.deferred},
           {"defer_reason", v.defer_reason},
           {"start_us", v.start_us},
           {"detection", v.detection},
           {"critical_path", v.critical_path},
           {"contributions", v.contributions},
           {"content_findings", v.content_findings},
           {"network_findings", v.network_findings},
           {"internet_findings", v.internet_findings},
           {"symptoms", v.symptoms},
           {"pathologies", v.pathologies},
           {"notes", v.notes}};
}
void from_json(const Json& j, DiagnosisReport& v) {
  j.at("session_id").get_to(v.session_id);
  j.at("revision").get_to(v.revision);
  j.at("deferred").get_to(v.deferred);
  j.at("defer_reason").get_to(v.defer_reason);
  j.at("start_us").get_to(v.start_us);
  j.at("detection").get_to(v.detection);
  j.at("critical_path").get_to(v.critical_path);
  j.at("contributions").get_to(v.contributions);
  j.at("content_findings").get_to(v.content_findings);
  j.at("network_findings").get_to(v.network_findings);
  j.at("internet_findings").get_to(v.internet_findings);
  j.at("symptoms").get_to(v.symptoms);
  j.at("pathologies").get_to(v.pathologies);
  j.at("notes").get_to(v.notes);
}

// ---------------------------------------------------------------------------

namespace {

Json parse_line(std::string_view line) {
  try {
    return Json::parse(line.begin(), line.end());
  } catch (const Json::parse_error& e) {
    throw DecodeError("malformed JSON", e.byte > 0 ? e.byte - 1 : 0);
  }
}

template <typename T>
T decode_as(const Json& j) {
  try {
    return j.get<T>();
  } catch (const DecodeError&) {
    throw;
  } catch (const Json::exception& e) {
    throw DecodeError(std::string("bad ") + std::string(type_tag<T>()) + " record: " + e.what(), 0);
  }
}

std::string tag_of(const Json& j) {
  if (!j.is_object()) throw DecodeError("record is not a JSON object", 0);
  auto it = j.find("type");
  if (it == j.end() || !it->is_string()) throw DecodeError("missing type tag", 0);
  auto v = j.find("v");
  if (v != j.end() && (!v->is_number_integer() || v->get<int>() != kFormatVersion)) {
    throw DecodeError("unsupported format version", 0);
  }
  return it->get<std::string>();
}

}  // namespace

template <typename T>
T from_jsonl(std::string_view line) {
  Json j = parse_line(line);
  std::string tag = tag_of(j);
  if (tag != type_tag<T>()) {
    throw DecodeError("expected type '" + std::string(type_tag<T>()) + "', got '" + tag + "'", 0);
  }
  return decode_as<T>(j);
}

template TraceHeader from_jsonl<TraceHeader>(std::string_view);
template RpcEdgeRecord from_jsonl<RpcEdgeRecord>(std::string_view);
template AnnotationRecord from_jsonl<AnnotationRecord>(std::string_view);
template NavTimingRecord from_jsonl<NavTimingRecord>(std::string_view);
template TcpSnapshot from_jsonl<TcpSnapshot>(std::string_view);
template SessionTrace from_jsonl<SessionTrace>(std::string_view);
template SyslogMessage from_jsonl<SyslogMessage>(std::string_view);
template Template from_jsonl<Template>(std::string_view);
template CausalRule from_jsonl<CausalRule>(std::string_view);
template ProblemGraph from_jsonl<ProblemGraph>(std::string_view);
template TopologySnapshot from_jsonl<TopologySnapshot>(std::string_view);
template DiagnosisReport from_jsonl<DiagnosisReport>(std::string_view);

std::string encode_session_record(const SessionRecord& r) {
  return std::visit([](const auto& v) { return to_jsonl(v); }, r);
}

SessionRecord decode_session_record(std::string_view line) {
  Json j = parse_line(line);
  std::string tag = tag_of(j);
  if (tag == type_tag<RpcEdgeRecord>()) return decode_as<RpcEdgeRecord>(j);
  if (tag == type_tag<AnnotationRecord>()) return decode_as<AnnotationRecord>(j);
  if (tag == type_tag<NavTimingRecord>()) return decode_as<NavTimingRecord>(j);
  if (tag == type_tag<TcpSnapshot>()) return decode_as<TcpSnapshot>(j);
  throw DecodeError("not a session record type '" + tag + "'", 0);
}

const SessionId& session_of(const SessionRecord& r) {
  return std::visit([](const auto& v) -> const SessionId& { return v.session_id; }, r);
}

}  // namespace tracekit
