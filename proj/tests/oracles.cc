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

#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

namespace oracle {

using namespace tracekit;

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
}

std::string fence(const std::vector<double>& history, double k, std::size_t min_samples, double x) {
  if (history.size() < min_samples) return "insufficient_data";
  const double q1 = quantile(history, 0.25), q3 = quantile(history, 0.75);
  if (x > q3 + k * (q3 - q1)) return "high";
  if (x < q1 - k * (q3 - q1)) return "low";
  return "normal";
}

namespace {

struct OArc {
  std::size_t to;
  std::int64_t w;
  bool emit;
  SegmentKind kind;
  std::string label;
  RpcId rpc;
};

std::int64_t clamp0(std::int64_t v) { return v < 0 ? 0 : v; }

}  // namespace

std::optional<Walk> longest_walk(const ExecutionGraph& g) {
  const std::size_t n = g.edges.size();
  std::vector<std::int64_t> vw(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = g.edges[i];
    if (e.direction == Direction::kRequestIn || e.direction == Direction::kResponseOut) {
      vw[i] = clamp0(e.last_byte.micros - e.first_byte.micros);
    }
  }
  std::vector<std::vector<OArc>> arcs(n);
  auto add = [&](std::size_t from, OArc a) {
    for (const auto& x : arcs[from]) {
      if (x.to == a.to) return;
    }
    arcs[from].push_back(a);
  };
  // Compute arcs: every causal predecessor at the same node, weighted from
  // the latest of them.
  std::map<std::size_t, std::vector<std::size_t>> preds;
  for (const auto& l : g.links) {
    bool compute = l.kind == LinkKind::kParentChild || l.kind == LinkKind::kSiblingSerialization ||
                   l.kind == LinkKind::kRedundancyContribution ||
                   (l.kind == LinkKind::kRequestResponse && g.edges[l.from].direction == Direction::kRequestIn);
    if (compute) preds[l.to].push_back(l.from);
  }
  for (const auto& [v, us] : preds) {
    std::int64_t latest = g.edges[us[0]].last_byte.micros;
    for (auto u : us) latest = std::max(latest, g.edges[u].last_byte.micros);
    const auto& t = g.edges[v];
    const RpcId served = t.direction == Direction::kRequestOut ? t.parent_rpc_id : t.rpc_id;
    for (auto u : us) add(u, {v, clamp0(t.first_byte.micros - latest), true, SegmentKind::kCompute, t.node, served});
  }
  for (const auto& r : g.rpcs) {
    if (r.request_out && r.request_in) add(*r.request_out, {*r.request_in, 0, false, SegmentKind::kNetwork, "", r.rpc_id});
    if (r.response_out && r.response_in) {
      std::int64_t w = 0;
      if (r.request_out && r.request_in) {
        const std::int64_t rtt = g.edges[*r.response_in].last_byte.micros - g.edges[*r.request_out].first_byte.micros;
        const std::int64_t res = g.edges[*r.response_out].last_byte.micros - g.edges[*r.request_in].first_byte.micros;
        w = clamp0(rtt - res);
      }
      add(*r.response_out, {*r.response_in, w, true, SegmentKind::kNetwork, r.caller + "->" + r.callee, r.rpc_id});
    }
    if (!(r.request_in && r.response_out) && r.request_out && r.response_in) {
      const auto& ro = g.edges[*r.request_out];
      const std::int64_t w = clamp0(g.edges[*r.response_in].last_byte.micros - ro.first_byte.micros);
      add(*r.request_out, {*r.response_in, w, true, SegmentKind::kNetwork,
                           r.caller + "->" + (r.callee.empty() ? ro.peer : r.callee), r.rpc_id});
    }
  }

  // Cycle check by DFS colouring.
  std::vector<int> colour(n, 0);
  std::function<bool(std::size_t)> cyclic = [&](std::size_t v) {
    colour[v] = 1;
    for (const auto& a : arcs[v]) {
      if (colour[a.to] == 1) return true;
      if (colour[a.to] == 0 && cyclic(a.to)) return true;
    }
    colour[v] = 2;
    return false;
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (colour[v] == 0 && cyclic(v)) return std::nullopt;
  }

  std::vector<std::size_t> starts, ends;
  for (const auto& r : g.rpcs) {
    if (r.is_root() && r.request_in && r.response_out) {
      starts.push_back(*r.request_in);
      ends.push_back(*r.response_out);
    }
  }
  // Roots pair with their own reply only.
  struct Cand {
    std::int64_t total;
    std::vector<RpcId> seq;
    std::vector<PathSegment> segs;
  };
  std::optional<Cand> best;
  auto consider = [&](Cand c) {
    if (!best || c.total > best->total || (c.total == best->total && c.seq < best->seq)) best = std::move(c);
  };
  std::function<void(std::size_t, std::size_t, Cand&, bool)> walk = [&](std::size_t v, std::size_t end, Cand& cur,
                                                                        bool any_end) {
    cur.total += vw[v];
    cur.seq.push_back(g.edges[v].rpc_id);
    if (vw[v] > 0) cur.segs.push_back({SegmentKind::kNetwork, g.edges[v].node, g.edges[v].rpc_id, vw[v]});
    if (any_end || v == end) consider(cur);
    for (const auto& a : arcs[v]) {
      Cand next = cur;
      next.total += a.w;
      if (a.emit) next.segs.push_back({a.kind, a.label, a.rpc, a.w});
      walk(a.to, end, next, any_end);
    }
  };
  for (std::size_t i = 0; i < starts.size(); ++i) {
    Cand c{0, {}, {}};
    walk(starts[i], ends[i], c, false);
  }
  if (!best) {
    for (std::size_t v = 0; v < n; ++v) {
      Cand c{0, {}, {}};
      walk(v, n, c, true);
    }
  }
  Walk out;
  if (best) {
    out.segments = best->segs;
    for (const auto& s : out.segments) out.total += s.duration_us;
  }
  return out;
}

int eval(const Ast& a, const std::vector<int>& vars) {
  switch (a.op) {
    case Ast::kVar:
      return vars[static_cast<std::size_t>(a.var)];
    case Ast::kNot: {
      int v = eval(a.kids[0], vars);
      return v == 2 ? 2 : 1 - v;
    }
    case Ast::kAnd: {
      int l = eval(a.kids[0], vars), r = eval(a.kids[1], vars);
      if (l == 0 || r == 0) return 0;
      if (l == 1 && r == 1) return 1;
      return 2;
    }
    case Ast::kOr: {
      int l = eval(a.kids[0], vars), r = eval(a.kids[1], vars);
      if (l == 1 || r == 1) return 1;
      if (l == 0 && r == 0) return 0;
      return 2;
    }
  }
  return 2;
}

std::string render(const Ast& a) {
  switch (a.op) {
    case Ast::kVar: return "s" + std::to_string(a.var);
    case Ast::kNot: return "NOT ( " + render(a.kids[0]) + " )";
    case Ast::kAnd: return "( " + render(a.kids[0]) + " AND " + render(a.kids[1]) + " )";
    case Ast::kOr: return "( " + render(a.kids[0]) + " OR " + render(a.kids[1]) + " )";
  }
  return "";
}

std::optional<std::int64_t> queueing_delay(const std::vector<std::pair<std::int64_t, std::int64_t>>& samples,
                                           std::int64_t window_us, std::int64_t at_us, std::int64_t delta_us) {
  std::optional<std::int64_t> mn;
  for (const auto& [t, d] : samples) {
    if (t > at_us - window_us && t <= at_us) mn = mn ? std::min(*mn, d) : d;
  }
  if (!mn) return std::nullopt;
  return delta_us - std::min(*mn, delta_us);
}

}  // namespace oracle
