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

#include "tracekit/problem_graph.h"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include "tracekit/errors.h"

namespace tracekit {

void ProblemGraphConfig::validate() const {
  if (window_us <= 0) throw ValidationError("window must be positive");
  if (overlap_us < 0 || overlap_us >= window_us) throw ValidationError("overlap must be in [0, window)");
}

namespace {

struct Inst {
  std::int64_t at = 0;
  int severity = 6;
};

struct Node {
  std::string device;
  std::string tmpl;
  std::vector<Inst> inst;  // sorted by time
};

struct Candidate {
  std::int64_t cause_at = 0;
  std::int64_t effect_at = 0;
  std::size_t rule = 0;
  std::size_t from = 0;
  std::size_t to = 0;
};

// Earliest (cause, effect) instance pair with cause <= effect (strict when
// `strict`), lexicographically.
std::optional<std::pair<std::int64_t, std::int64_t>> earliest_pair(const Node& c, const Node& e, bool strict) {
  for (const auto& ci : c.inst) {
    auto it = std::find_if(e.inst.begin(), e.inst.end(), [&](const Inst& x) {
      return strict ? x.at > ci.at : x.at >= ci.at;
    });
    if (it != e.inst.end()) return std::make_pair(ci.at, it->at);
  }
  return std::nullopt;
}

class Window {
 public:
  Window(std::vector<Node> nodes, std::int64_t start, std::int64_t end)
      : nodes_(std::move(nodes)), adj_(nodes_.size()), start_(start), end_(end) {}

  void add_edges(std::vector<Candidate> cands, const std::vector<CausalRule>& rules, ProblemGraphStats& st) {
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return std::tie(a.cause_at, a.effect_at, a.rule, a.from, a.to) <
             std::tie(b.cause_at, b.effect_at, b.rule, b.from, b.to);
    });
    for (const auto& c : cands) {
      if (linked_.count({c.from, c.to})) continue;
      if (reaches(c.to, c.from)) {
        ++st.dropped_cycle_edges;
        continue;
      }
      linked_.insert({c.from, c.to});
      adj_[c.from].push_back(c.to);
      edges_.push_back({c.from, c.to, c.rule, rules[c.rule].cause + "->" + rules[c.rule].effect});
    }
  }

  std::vector<ProblemGraph> components(int max_singleton_severity) const {
    const std::size_t n = nodes_.size();
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& e : edges_) parent[find(e.from)] = find(e.to);
    std::map<std::size_t, std::vector<std::size_t>> comps;
    for (std::size_t i = 0; i < n; ++i) comps[find(i)].push_back(i);

    std::vector<ProblemGraph> out;
    for (const auto& [_, members] : comps) {
      if (members.size() == 1) {
        int sev = 7;
        for (const auto& x : nodes_[members[0]].inst) sev = std::min(sev, x.severity);
        if (sev > max_singleton_severity) continue;
      }
      std::map<std::size_t, std::size_t> remap;
      ProblemGraph g;
      g.window_start_us = start_;
      g.window_end_us = end_;
      for (std::size_t m : members) {
        remap[m] = g.nodes.size();
        const Node& nd = nodes_[m];
        int sev = 7;
        for (const auto& x : nd.inst) sev = std::min(sev, x.severity);
        g.nodes.push_back({nd.device, nd.tmpl, nd.inst.front().at, nd.inst.back().at, sev});
      }
      for (const auto& e : edges_) {
        auto it = remap.find(e.from);
        if (it == remap.end()) continue;
        g.edges.push_back({it->second, remap.at(e.to), e.rule, e.label});
      }
      out.push_back(std::move(g));
    }
    return out;
  }

 private:
  bool reaches(std::size_t from, std::size_t to) const {
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<std::size_t> stack{from};
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      if (v == to) return true;
      if (seen[v]) continue;
      seen[v] = true;
      for (std::size_t w : adj_[v]) stack.push_back(w);
    }
    return false;
  }

  std::vector<Node> nodes_;
  std::vector<std::vector<std::size_t>> adj_;
  std::set<std::pair<std::size_t, std::size_t>> linked_;
  std::vector<ProblemEdge> edges_;
  std::int64_t start_;
  std::int64_t end_;
};

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if (a % b != 0 && a < 0) --q;
  return q;
}

}  // namespace

std::vector<ProblemGraph> mine_problem_graphs(const std::vector<SyslogMessage>& messages,
                                              const std::vector<CausalRule>& rules, const Topology* topo,
                                              const ProblemGraphConfig& cfg, ProblemGraphStats* stats) {
  cfg.validate();
  ProblemGraphStats local;
  ProblemGraphStats& st = stats ? *stats : local;
  st = {};

  std::vector<const SyslogMessage*> msgs;
  for (const auto& m : messages) {
    if (!m.template_id) {
      ++st.unmatched_messages;
      continue;
    }
    msgs.push_back(&m);
  }
  std::vector<ProblemGraph> out;
  if (msgs.empty()) return out;
  std::stable_sort(msgs.begin(), msgs.end(), [](const SyslogMessage* a, const SyslogMessage* b) {
    return std::tie(a->at.micros, a->device, *a->template_id) < std::tie(b->at.micros, b->device, *b->template_id);
  });

  std::multimap<std::string, std::size_t> rules_by_cause;
  for (std::size_t i = 0; i < rules.size(); ++i) rules_by_cause.emplace(rules[i].cause, i);

  const std::int64_t stride = cfg.window_us - cfg.overlap_us;
  const std::int64_t t0 = msgs.front()->at.micros;
  const std::int64_t t1 = msgs.back()->at.micros;
  // First window whose span still covers t0.
  std::int64_t w = floor_div(t0 - cfg.window_us, stride) + 1;
  std::size_t lo = 0;
  for (; w * stride <= t1; ++w) {
    const std::int64_t start = w * stride;
    const std::int64_t end = start + cfg.window_us;
    while (lo < msgs.size() && msgs[lo]->at.micros < start) ++lo;
    std::size_t hi = lo;
    while (hi < msgs.size() && msgs[hi]->at.micros < end) ++hi;
    if (hi == lo) {
      // Skip ahead over empty stretches.
      if (lo < msgs.size()) w = std::max(w, floor_div(msgs[lo]->at.micros - cfg.window_us, stride));
      continue;
    }
    ++st.windows;

    std::map<std::pair<std::string, std::string>, std::size_t> index;
    std::vector<Node> nodes;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto* m = msgs[i];
      auto [it, fresh] = index.try_emplace({m->device, *m->template_id}, nodes.size());
      if (fresh) nodes.push_back({m->device, *m->template_id, {}});
      nodes[it->second].inst.push_back({m->at.micros, m->severity});
    }

    std::vector<Candidate> intra, inter;
    for (std::size_t c = 0; c < nodes.size(); ++c) {
      auto [rb, re] = rules_by_cause.equal_range(nodes[c].tmpl);
      for (auto rit = rb; rit != re; ++rit) {
        const CausalRule& r = rules[rit->second];
        for (std::size_t e = 0; e < nodes.size(); ++e) {
          if (nodes[e].tmpl != r.effect || e == c) continue;
          const bool same = nodes[e].device == nodes[c].device;
          if (r.scope == RuleScope::kIntraDevice) {
            if (!same) continue;
            if (auto p = earliest_pair(nodes[c], nodes[e], false)) {
              intra.push_back({p->first, p->second, rit->second, c, e});
            }
          } else {
            if (same || topo == nullptr || !topo->adjacent(nodes[c].device, nodes[e].device)) continue;
            if (auto p = earliest_pair(nodes[c], nodes[e], true)) {
              inter.push_back({p->first, p->second, rit->second, c, e});
            }
          }
        }
      }
    }
    Window win(std::move(nodes), start, end);
    win.add_edges(std::move(intra), rules, st);
    win.add_edges(std::move(inter), rules, st);
    for (auto& g : win.components(cfg.max_singleton_severity)) {
      std::int64_t first = std::numeric_limits<std::int64_t>::max();
      for (const auto& n : g.nodes) first = std::min(first, n.first_at_us);
      const std::int64_t own = start + cfg.overlap_us / 2;
      if (first >= own && first < own + stride) out.push_back(std::move(g));
    }
  }
  return out;
}

std::size_t root_node(const ProblemGraph& g) {
  if (g.nodes.empty()) throw ValidationError("empty problem graph");
  std::vector<int> indeg(g.nodes.size(), 0);
  for (const auto& e : g.edges) ++indeg[e.to];
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (indeg[i] != 0) continue;
    if (!best || g.nodes[i].first_at_us < g.nodes[*best].first_at_us) best = i;
  }
  return best.value_or(0);
}

ProblemGraphSummary summarize(const ProblemGraph& g, std::size_t graph_id, const Topology* topo) {
  ProblemGraphSummary s;
  s.graph_id = graph_id;
  const auto& root = g.nodes[root_node(g)];
  s.root_device = root.device;
  s.root_template = root.template_id;
  s.tier = (topo && topo->has_device(root.device)) ? std::string(to_string(topo->tier_of(root.device)))
                                                   : "unknown";
  std::set<std::string> devs;
  for (const auto& n : g.nodes) devs.insert(n.device);
  s.devices.assign(devs.begin(), devs.end());
  s.node_count = g.nodes.size();
  s.window_start_us = g.window_start_us;
  s.window_end_us = g.window_end_us;
  return s;
}

std::vector<ProblemGraphSummary> correlate_rpc_problems(const std::vector<std::string>& candidates,
                                                        const std::vector<ProblemGraphSummary>& graphs,
                                                        std::int64_t start_us, std::int64_t end_us) {
  std::set<std::string> cand(candidates.begin(), candidates.end());
  std::vector<ProblemGraphSummary> out;
  for (const auto& g : graphs) {
    if (g.window_end_us <= start_us || g.window_start_us > end_us) continue;
    bool touches = std::any_of(g.devices.begin(), g.devices.end(),
                               [&](const std::string& d) { return cand.count(d) != 0; });
    if (!touches) continue;
    out.push_back(g);
    out.back().label = "possible";
  }
  return out;
}

}  // namespace tracekit
