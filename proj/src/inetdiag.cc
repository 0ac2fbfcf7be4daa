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

#include "tracekit/inetdiag.h"

#include <algorithm>
#include <cstdlib>

#include "tracekit/errors.h"

namespace tracekit {

double rtt_variation(const TcpSnapshot& snap) {
  if (snap.srtt_us <= 0) throw ValidationError("srtt must be positive for rtt variation");
  return static_cast<double>(snap.rttvar_us) / static_cast<double>(snap.srtt_us);
}

std::int64_t rto_delay(const TcpSnapshot& snap) { return snap.rto_us * (1 + snap.retrans_segments); }

BottleneckComponents bottleneck_components(const RpcLatencyDecomposition& d, const TcpSnapshot& snap) {
  const std::int64_t gap = std::max<std::int64_t>(0, d.delta_fb_us - d.delta_cdn_us - d.delta_be_us);
  const std::int64_t retrans = std::min(snap.retrans_segments * snap.rto_us, gap);
  return {snap.srtt_us + retrans, d.delta_cdn_us + d.delta_be_us};
}

Bottleneck classify_bottleneck(const RpcLatencyDecomposition& d, const TcpSnapshot& snap) {
  auto c = bottleneck_components(d, snap);
  return c.path_us > c.server_us ? Bottleneck::kInternet : Bottleneck::kCdnBackend;
}

std::int64_t download_stack_bound(const RpcLatencyDecomposition& d) {
  return std::max<std::int64_t>(0, d.delta_fb_us - d.delta_cdn_us - d.delta_be_us - d.delta_rto_us);
}

const TcpSnapshot* select_snapshot(const SessionTrace& trace, const ExecutionGraph& g, const RpcEntry& rpc) {
  if (!rpc.request_in) return nullptr;
  const auto& req_in = g.edges[*rpc.request_in];
  std::optional<std::string> conn;
  for (const auto& a : trace.annotations) {
    if (a.rpc_id == rpc.rpc_id && a.node == req_in.node && a.key == "conn_id") conn = a.value;
  }
  const TcpSnapshot* best = nullptr;
  std::int64_t best_dist = 0;
  for (const auto& s : trace.tcp_snapshots) {
    if (s.at.clock_id != req_in.first_byte.clock_id) continue;
    if (conn && s.connection_id != *conn) continue;
    const std::int64_t dist = std::llabs(s.at.micros - req_in.first_byte.micros);
    if (!best || dist < best_dist ||
        (dist == best_dist && s.at.micros < best->at.micros)) {
      best = &s;
      best_dist = dist;
    }
  }
  return best;
}

RpcLatencyDecomposition decompose(const ExecutionGraph& g, const RpcEntry& rpc, const TcpSnapshot& snap) {
  if (!rpc.request_out || !rpc.request_in || !rpc.response_out || !rpc.response_in) {
    throw ValidationError("decomposition needs all four edges of rpc " + rpc_hex(rpc.rpc_id));
  }
  const auto& req_out = g.edges[*rpc.request_out];
  const auto& req_in = g.edges[*rpc.request_in];
  const auto& resp_out = g.edges[*rpc.response_out];
  const auto& resp_in = g.edges[*rpc.response_in];

  RpcLatencyDecomposition d;
  d.delta_fb_us = elapsed_us(req_out.first_byte, resp_in.first_byte);

  // Backend time: union of the callee's outgoing call intervals.
  std::vector<std::pair<std::int64_t, std::int64_t>> spans;
  for (const RpcEntry* c : g.children(rpc.rpc_id, req_in.node)) {
    if (!c->request_out || !c->response_in) continue;
    const auto& o = g.edges[*c->request_out];
    const auto& i = g.edges[*c->response_in];
    spans.emplace_back(o.first_byte.micros, elapsed_us(o.first_byte, i.last_byte) + o.first_byte.micros);
  }
  std::sort(spans.begin(), spans.end());
  std::int64_t be = 0, cur_lo = 0, cur_hi = 0;
  bool open = false;
  for (const auto& [lo, hi] : spans) {
    if (!open || lo > cur_hi) {
      if (open) be += cur_hi - cur_lo;
      cur_lo = lo;
      cur_hi = hi;
      open = true;
    } else {
      cur_hi = std::max(cur_hi, hi);
    }
  }
  if (open) be += cur_hi - cur_lo;
  d.delta_be_us = be;
  d.cache_hit = spans.empty();
  d.delta_cdn_us = elapsed_us(req_in.last_byte, resp_out.first_byte) - be;
  d.delta_rto_us = rto_delay(snap);
  if (d.delta_fb_us < 0 || d.delta_cdn_us < 0 || d.delta_be_us < 0 || d.delta_rto_us < 0) {
    throw ValidationError("negative latency component for rpc " + rpc_hex(rpc.rpc_id));
  }
  return d;
}

std::vector<InternetFinding> diagnose_internet(const SessionTrace& trace, const ExecutionGraph& g) {
  std::vector<InternetFinding> out;
  if (trace.tcp_snapshots.empty()) return out;
  for (const auto& r : g.rpcs) {
    if (!r.request_out || !r.request_in || !r.response_out || !r.response_in) continue;
    const TcpSnapshot* snap = select_snapshot(trace, g, r);
    if (snap == nullptr) continue;
    RpcLatencyDecomposition d;
    try {
      d = decompose(g, r, *snap);
    } catch (const ValidationError&) {
      continue;
    }
    InternetFinding f;
    f.rpc_id = r.rpc_id;
    f.connection_id = snap->connection_id;
    f.bottleneck = classify_bottleneck(d, *snap);
    f.rtt_variation = snap->srtt_us > 0 ? rtt_variation(*snap) : 0.0;
    f.delta_fb_us = d.delta_fb_us;
    f.delta_cdn_us = d.delta_cdn_us;
    f.delta_be_us = d.delta_be_us;
    f.delta_rto_us = d.delta_rto_us;
    f.retrans_segments = snap->retrans_segments;
    f.cache_hit = d.cache_hit;
    f.download_stack_bound_us = download_stack_bound(d);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace tracekit
