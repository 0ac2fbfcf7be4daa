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

#include "tracekit/model.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>
#include <tuple>

#include "tracekit/errors.h"

namespace tracekit {

std::int64_t elapsed_us(const Timestamp& from, const Timestamp& to) {
  if (from.clock_id != to.clock_id) {
    throw ClockMismatchError("cannot compare clock '" + from.clock_id +
                             "' with clock '" + to.clock_id + "'");
  }
  return to.micros - from.micros;
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::uint64_t parse_hex64(std::string_view s, std::size_t base_offset) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    int d = hex_value(s[i]);
    if (d < 0) throw DecodeError("non-hex digit", base_offset + i);
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

}  // namespace

std::string SessionId::hex() const { return hex64(hi) + hex64(lo); }

SessionId SessionId::from_hex(std::string_view s) {
  if (s.size() != 32) {
    throw DecodeError("session id must be 32 hex digits", std::min<std::size_t>(s.size(), 32));
  }
  return SessionId{parse_hex64(s.substr(0, 16), 0), parse_hex64(s.substr(16), 16)};
}

std::string rpc_hex(RpcId id) { return hex64(id); }

std::string service_of(std::string_view node) {
  auto at = node.find('@');
  return std::string(at == std::string_view::npos ? node : node.substr(0, at));
}

std::string host_of(std::string_view node) {
  auto at = node.find('@');
  return std::string(at == std::string_view::npos ? node : node.substr(at + 1));
}

std::string datacenter_of(std::string_view host) {
  auto dot = host.rfind('.');
  if (dot == std::string_view::npos || dot + 1 == host.size()) return "default";
  return std::string(host.substr(dot + 1));
}

// ---------------------------------------------------------------------------

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names,
                        std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  return std::nullopt;
}

constexpr std::array<std::string_view, 4> kDirectionNames = {
    "request_out", "request_in", "response_out", "response_in"};
constexpr std::array<std::string_view, 6> kLayerNames = {
    "PHY", "L2", "L3", "L4", "routing", "hardware"};
constexpr std::array<std::string_view, 2> kScopeNames = {"intra_device",
                                                         "inter_device"};
constexpr std::array<std::string_view, 4> kTierNames = {"ToR", "AGG", "CORE",
                                                        "middlebox"};
constexpr std::array<std::string_view, 4> kVerdictNames = {
    "normal", "high", "low", "insufficient_data"};
constexpr std::array<std::string_view, 2> kBottleneckNames = {"internet",
                                                              "cdn_backend"};

}  // namespace

std::string_view to_string(Direction d) {
  return kDirectionNames[static_cast<std::size_t>(d)];
}
std::optional<Direction> direction_from_string(std::string_view s) {
  return lookup<Direction>(kDirectionNames, s);
}
std::string_view to_string(Layer l) {
  return kLayerNames[static_cast<std::size_t>(l)];
}
std::optional<Layer> layer_from_string(std::string_view s) {
  return lookup<Layer>(kLayerNames, s);
}
std::string_view to_string(RuleScope s) {
  return kScopeNames[static_cast<std::size_t>(s)];
}
std::optional<RuleScope> scope_from_string(std::string_view s) {
  return lookup<RuleScope>(kScopeNames, s);
}
std::string_view to_string(Tier t) {
  return kTierNames[static_cast<std::size_t>(t)];
}
std::optional<Tier> tier_from_string(std::string_view s) {
  return lookup<Tier>(kTierNames, s);
}
std::string_view to_string(Verdict v) {
  return kVerdictNames[static_cast<std::size_t>(v)];
}
std::optional<Verdict> verdict_from_string(std::string_view s) {
  return lookup<Verdict>(kVerdictNames, s);
}
std::string_view to_string(SegmentKind k) {
  return k == SegmentKind::kCompute ? "compute" : "network";
}
std::string_view to_string(Bottleneck b) {
  return kBottleneckNames[static_cast<std::size_t>(b)];
}
std::optional<Bottleneck> bottleneck_from_string(std::string_view s) {
  return lookup<Bottleneck>(kBottleneckNames, s);
}

// ---------------------------------------------------------------------------

namespace {

std::string edge_locator(const RpcEdgeRecord& e) {
  return "edge rpc=" + rpc_hex(e.rpc_id) + " node=" + e.node + " dir=" +
         std::string(to_string(e.direction));
}

}  // namespace

std::vector<Violation> validate_trace(const SessionTrace& trace) {
  std::vector<Violation> out;
  auto add = [&out](std::string kind, std::string field, std::string record) {
    out.push_back({std::move(kind), std::move(field), std::move(record)});
  };

  std::set<RpcId> rpc_ids;
  for (const auto& e : trace.edges) rpc_ids.insert(e.rpc_id);

  std::set<std::tuple<RpcId, std::string, Direction, std::int64_t>> seen;
  std::set<RpcId> dangling;
  for (const auto& e : trace.edges) {
    const std::string loc = edge_locator(e);
    if (e.session_id != trace.session_id) add("session mismatch", "session_id", loc);
    if (e.rpc_id == kRootParent) add("reserved rpc id", "rpc_id", loc);
    if (e.rpc_id == e.parent_rpc_id) add("self parent", "parent_rpc_id", loc);
    if (e.parent_rpc_id != kRootParent && !rpc_ids.count(e.parent_rpc_id)) {
      dangling.insert(e.rpc_id);
    }
    if (e.first_byte.clock_id != e.node) add("clock mismatch", "first_byte", loc);
    if (e.last_byte.clock_id != e.node) add("clock mismatch", "last_byte", loc);
    if (e.first_byte.clock_id == e.last_byte.clock_id &&
        e.first_byte.micros > e.last_byte.micros) {
      add("timestamp order", "first_byte", loc);
    }
    if (e.first_byte.micros < 0 || e.last_byte.micros < 0) {
      add("negative timestamp", "first_byte", loc);
    }
    if (e.payload_bytes < 0) add("negative payload", "payload_bytes", loc);
    if (!seen.insert({e.rpc_id, e.node, e.direction, e.first_byte.micros}).second) {
      add("duplicate edge", "rpc_id", loc);
    }
  }
  for (RpcId id : dangling) {
    add("dangling parent", "parent_rpc_id", "rpc=" + rpc_hex(id));
  }

  for (const auto& a : trace.annotations) {
    const std::string loc = "annotation rpc=" + rpc_hex(a.rpc_id) + " node=" + a.node;
    if (a.session_id != trace.session_id) add("session mismatch", "session_id", loc);
    if (a.key.empty()) add("empty key", "key", loc);
    if (a.at.micros < 0) add("negative timestamp", "at", loc);
  }

  if (trace.navtiming) {
    const auto& nav = *trace.navtiming;
    if (nav.session_id != trace.session_id) add("session mismatch", "session_id", "navtiming");
    if (nav.onload_ms < 0) add("negative onload", "onload_ms", "navtiming");
    const Timestamp* prev = nullptr;
    for (const auto& ev : nav.events) {
      const std::string loc = "navtiming event=" + ev.name;
      if (ev.start.clock_id != ev.end.clock_id) {
        add("clock mismatch", "end", loc);
        continue;
      }
      if (ev.start.micros > ev.end.micros) add("timestamp order", "start", loc);
      if (prev != nullptr) {
        if (prev->clock_id != ev.start.clock_id) {
          add("clock mismatch", "start", loc);
        } else if (prev->micros > ev.start.micros) {
          add("event order", "start", loc);
        }
      }
      if (!nav.events.empty() && nav.events.front().start.clock_id == ev.end.clock_id) {
        double rel_ms = static_cast<double>(ev.end.micros - nav.events.front().start.micros) / 1000.0;
        if (rel_ms > nav.onload_ms) add("event after onload", "onload_ms", loc);
      }
      prev = &ev.start;
    }
  }

  for (const auto& s : trace.tcp_snapshots) {
    const std::string loc = "tcp connection=" + s.connection_id;
    if (s.session_id != trace.session_id) add("session mismatch", "session_id", loc);
    if (s.srtt_us < 0 || s.rttvar_us < 0 || s.rto_us < 0 || s.retrans_segments < 0 ||
        s.reordering_events < 0 || s.cwnd_segments < 0 || s.send_window_bytes < 0 ||
        s.recv_window_bytes < 0) {
      add("negative counter", "srtt_us", loc);
    }
    if (s.rto_us < s.srtt_us) add("rto below srtt", "rto_us", loc);
  }

  std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.kind, a.field, a.record) < std::tie(b.kind, b.field, b.record);
  });
  return out;
}

}  // namespace tracekit
