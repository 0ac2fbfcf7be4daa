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

#include "tracekit/critpath.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include "tracekit/errors.h"

namespace tracekit {

std::int64_t service_latency(const RpcEdgeRecord& e0, const RpcEdgeRecord& e1) {
  if (e0.node != e1.node) {
    throw ClockMismatchError("service latency needs edges at one node, got " + e0.node +
                             " and " + e1.node);
  }
  std::int64_t d = elapsed_us(e0.last_byte, e1.first_byte);
  if (d < 0) {
    throw ClockAnomalyError("outgoing edge starts before incoming edge ends",
                            e0.last_byte.micros, e1.first_byte.micros);
  }
  return d;
}

std::int64_t network_latency(const RpcEdgeRecord& edge) {
  return elapsed_us(edge.first_byte, edge.last_byte);
}

namespace {

struct Arc {
  std::size_t to = 0;
  std::int64_t weight = 0;
  SegmentKind kind = SegmentKind::kCompute;
  bool emit = false;
  std::string label;
  RpcId rpc = 0;
  bool fallback = false;
};

struct Best {
  std::int64_t total = 0;
  std::vector<RpcId> seq;
  std::optional<std::size_t> arc;  // index into arcs[v]
};

bool better(std::int64_t total, const std::vector<RpcId>& seq, const Best& cur) {
  if (total != cur.total) return total > cur.total;
  return seq < cur.seq;
}

class WalkDag {
 public:
  explicit WalkDag(const ExecutionGraph& g) : g_(g), arcs_(g.edges.size()), vw_(g.edges.size(), 0) {
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      const auto& e = g.edges[i];
      if (e.direction == Direction::kRequestIn || e.direction == Direction::kResponseOut) {
        vw_[i] = std::max<std::int64_t>(0, network_latency(e));
      }
    }
    add_compute_arcs();
    add_network_arcs();
  }

  CriticalPath solve() {
    CriticalPath best_path;
    std::optional<std::pair<std::int64_t, std::vector<RpcId>>> best_key;
    bool any_root = false;
    for (const auto& r : g_.rpcs) {
      if (!r.is_root() || !r.request_in || !r.response_out) continue;
      any_root = true;
      auto best = dp({*r.response_out});
      const Best& b = best[*r.request_in];
      if (b.seq.empty()) continue;
      if (!best_key || b.total > best_key->first ||
          (b.total == best_key->first && b.seq < best_key->second)) {
        best_key = {b.total, b.seq};
        best_path = trace_path(best, *r.request_in);
      }
    }
    if (!best_key) {
      // Best effort: longest walk anywhere in the graph.
      std::vector<std::size_t> sinks(g_.edges.size());
      for (std::size_t i = 0; i < sinks.size(); ++i) sinks[i] = i;
      auto best = dp(sinks);
      std::optional<std::size_t> start;
      for (std::size_t v = 0; v < g_.edges.size(); ++v) {
        if (best[v].seq.empty()) continue;
        if (!start || better(best[v].total, best[v].seq, best[*start])) start = v;
      }
      if (start) best_path = trace_path(best, *start);
      best_path.partial = true;
      best_path.notes.push_back(any_root ? "no complete walk from the root request to its reply"
                                         : "no complete root rpc");
    }
    if (!g_.gaps.empty()) {
      best_path.partial = true;
      best_path.notes.push_back("graph has " + std::to_string(g_.gaps.size()) + " gap(s)");
    }
    for (auto& n : anomalies_) best_path.notes.push_back(n);
    if (cyclic_) {
      best_path.partial = true;
      best_path.notes.push_back("causal links contain a cycle; path is best effort");
    }
    return best_path;
  }

 private:
  void add_arc(std::size_t from, Arc a) {
    for (auto& existing : arcs_[from]) {
      if (existing.to == a.to) return;
    }
    arcs_[from].push_back(std::move(a));
  }

  static bool is_compute_link(const ExecutionGraph& g, const CausalLink& l) {
    switch (l.kind) {
      case LinkKind::kParentChild:
      case LinkKind::kSiblingSerialization:
      case LinkKind::kRedundancyContribution:
        return true;
      case LinkKind::kRequestResponse:
        return g.edges[l.from].direction == Direction::kRequestIn;
      case LinkKind::kMessageTransit:
        return false;
    }
    return false;
  }

  void add_compute_arcs() {
    std::map<std::size_t, std::vector<std::size_t>> preds;
    for (const auto& l : g_.links) {
      if (is_compute_link(g_, l)) preds[l.to].push_back(l.from);
    }
    for (const auto& [v, us] : preds) {
      const auto& target = g_.edges[v];
      std::int64_t latest = std::numeric_limits<std::int64_t>::min();
      for (std::size_t u : us) latest = std::max(latest, g_.edges[u].last_byte.micros);
      std::int64_t w = target.first_byte.micros - latest;
      if (w < 0) {
        anomalies_.push_back("clock anomaly before " + std::string(to_string(target.direction)) +
                             " of rpc " + rpc_hex(target.rpc_id) + " at " + target.node);
        w = 0;
      }
      // The node is serving the parent of an outgoing request, or the rpc
      // it is replying to.
      RpcId served = target.direction == Direction::kRequestOut ? target.parent_rpc_id
                                                                 : target.rpc_id;
      for (std::size_t u : us) {
        add_arc(u, Arc{v, w, SegmentKind::kCompute, true, target.node, served, false});
      }
    }
  }

  void add_network_arcs() {
    for (const auto& r : g_.rpcs) {
      const bool callee_seen = r.request_in && r.response_out;
      if (r.request_out && r.request_in) {
        add_arc(*r.request_out, Arc{*r.request_in, 0, SegmentKind::kNetwork, false, "", r.rpc_id, false});
      }
      if (r.response_out && r.response_in) {
        std::int64_t net = 0;
        if (r.request_out && r.request_in) {
          const auto& req_out = g_.edges[*r.request_out];
          const auto& req_in = g_.edges[*r.request_in];
          const auto& resp_out = g_.edges[*r.response_out];
          const auto& resp_in = g_.edges[*r.response_in];
          net = elapsed_us(req_out.first_byte, resp_in.last_byte) -
                elapsed_us(req_in.first_byte, resp_out.last_byte);
          if (net < 0) {
            anomalies_.push_back("negative network time for rpc " + rpc_hex(r.rpc_id));
            net = 0;
          }
        }
        add_arc(*r.response_out, Arc{*r.response_in, net, SegmentKind::kNetwork, true,
                                     r.caller + "->" + r.callee, r.rpc_id, false});
      }
      if (!callee_seen && r.request_out && r.response_in) {
        const auto& req_out = g_.edges[*r.request_out];
        const auto& resp_in = g_.edges[*r.response_in];
        std::int64_t rtt = std::max<std::int64_t>(0, elapsed_us(req_out.first_byte, resp_in.last_byte));
        std::string callee = r.callee.empty() ? req_out.peer : r.callee;
        add_arc(*r.request_out, Arc{*r.response_in, rtt, SegmentKind::kNetwork, true,
                                    r.caller + "->" + callee, r.rpc_id, true});
      }
    }
  }

  std::vector<std::size_t> topo_order() {
    const std::size_t n = g_.edges.size();
    std::vector<int> indeg(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
      for (const auto& a : arcs_[v]) ++indeg[a.to];
    }
    std::vector<std::size_t> order;
    std::vector<std::size_t> ready;
    for (std::size_t v = n; v-- > 0;) {
      if (indeg[v] == 0) ready.push_back(v);
    }
    while (!ready.empty()) {
      std::size_t v = ready.back();
      ready.pop_back();
      order.push_back(v);
      for (const auto& a : arcs_[v]) {
        if (--indeg[a.to] == 0) ready.push_back(a.to);
      }
    }
    if (order.size() != n) cyclic_ = true;
    return order;
  }

  /// Best walk from every vertex to any of `sinks`.
  std::vector<Best> dp(const std::vector<std::size_t>& sinks) {
    const std::size_t n = g_.edges.size();
    std::vector<Best> best(n);
    std::vector<bool> is_sink(n, false);
    for (std::size_t s : sinks) is_sink[s] = true;
    auto order = topo_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      std::size_t v = *it;
      const RpcId rv = g_.edges[v].rpc_id;
      if (is_sink[v]) {
        best[v].total = vw_[v];
        best[v].seq = {rv};
      }
      for (std::size_t ai = 0; ai < arcs_[v].size(); ++ai) {
        const Arc& a = arcs_[v][ai];
        const Best& next = best[a.to];
        if (next.seq.empty()) continue;
        std::int64_t total = vw_[v] + a.weight + next.total;
        std::vector<RpcId> seq;
        seq.reserve(next.seq.size() + 1);
        seq.push_back(rv);
        seq.insert(seq.end(), next.seq.begin(), next.seq.end());
        if (best[v].seq.empty() || better(total, seq, best[v])) {
          best[v].total = total;
          best[v].seq = std::move(seq);
          best[v].arc = ai;
        }
      }
    }
    return best;
  }

  CriticalPath trace_path(const std::vector<Best>& best, std::size_t start) {
    CriticalPath path;
    std::size_t v = start;
    while (true) {
      const auto& e = g_.edges[v];
      if (vw_[v] > 0) {
        path.segments.push_back({SegmentKind::kNetwork, e.node, e.rpc_id, vw_[v]});
      }
      if (!best[v].arc) break;
      const Arc& a = arcs_[v][*best[v].arc];
      if (a.emit) path.segments.push_back({a.kind, a.label, a.rpc, a.weight});
      if (a.fallback) {
        path.partial = true;
        path.notes.push_back("callee side of rpc " + rpc_hex(a.rpc) + " unobserved");
      }
      v = a.to;
    }
    for (const auto& s : path.segments) path.total_latency_us += s.duration_us;
    return path;
  }

  const ExecutionGraph& g_;
  std::vector<std::vector<Arc>> arcs_;
  std::vector<std::int64_t> vw_;
  std::vector<std::string> anomalies_;
  bool cyclic_ = false;
};

}  // namespace

CriticalPath critical_path(const ExecutionGraph& graph) { return WalkDag(graph).solve(); }

EndToEnd end_to_end_latency(const SessionTrace& trace) {
  if (trace.navtiming && trace.navtiming->onload_ms > 0) {
    return {static_cast<std::int64_t>(std::llround(trace.navtiming->onload_ms * 1000.0)), "navtiming"};
  }
  std::map<RpcId, std::pair<const RpcEdgeRecord*, const RpcEdgeRecord*>> roots;
  for (const auto& e : trace.edges) {
    if (e.parent_rpc_id != kRootParent) continue;
    if (e.direction == Direction::kRequestIn) roots[e.rpc_id].first = &e;
    if (e.direction == Direction::kResponseOut) roots[e.rpc_id].second = &e;
  }
  std::int64_t best = 0;
  for (const auto& [id, pr] : roots) {
    if (pr.first && pr.second) {
      best = std::max(best, elapsed_us(pr.first->first_byte, pr.second->last_byte));
    }
  }
  return {best, "root_round_trip"};
}

std::vector<Contribution> service_contributions(const CriticalPath& path, std::int64_t e2e_us) {
  if (e2e_us <= 0) throw ValidationError("end-to-end latency is zero; fractions undefined");
  std::map<std::string, std::int64_t> sums;
  for (const auto& s : path.segments) {
    if (s.kind == SegmentKind::kCompute) sums[service_of(s.node)] += s.duration_us;
  }
  std::vector<Contribution> out;
  for (const auto& [svc, us] : sums) {
    out.push_back({svc, us, static_cast<double>(us) / static_cast<double>(e2e_us)});
  }
  std::stable_sort(out.begin(), out.end(), [](const Contribution& a, const Contribution& b) {
    return a.latency_us > b.latency_us;
  });
  return out;
}

}  // namespace tracekit
