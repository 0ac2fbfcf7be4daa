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

// Acceptance suite: one PASS/FAIL line per criterion, exit 1 on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "tracekit/causality.h"
#include "tracekit/critpath.h"
#include "tracekit/detect.h"
#include "tracekit/errors.h"
#include "tracekit/inetdiag.h"
#include "tracekit/ingest.h"
#include "tracekit/problem_graph.h"
#include "tracekit/queueing.h"
#include "tracekit/rootcause.h"
#include "tracekit/rule_mining.h"
#include "tracekit/sim.h"
#include "tracekit/topology.h"
#include "tracekit/trace_api.h"

using namespace tracekit;
using SteadyClock = std::chrono::steady_clock;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

double seconds_since(SteadyClock::time_point t0) {
  return std::chrono::duration<double>(SteadyClock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::map<SessionId, AssembledSession> assemble(const SessionBundle& b) {
  SessionStore store;
  for (const auto& r : b.records) store.ingest(r.record, r.arrival_ms);
  std::map<SessionId, AssembledSession> out;
  for (const auto& id : store.sessions()) out.emplace(id, store.assemble_session(id));
  return out;
}

template <class T>
std::size_t sym_diff(const std::set<T>& a, const std::set<T>& b) {
  std::vector<T> d;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(d));
  return d.size();
}

// ---------------------------------------------------------------------------

Result c1_header_roundtrip() {
  SimRng rng(101);
  const auto t0 = SteadyClock::now();
  std::size_t bad = 0;
  for (int i = 0; i < 10000; ++i) {
    TraceHeader h;
    h.session_id = {rng.next(), rng.next()};
    h.rpc_id = rng.next();
    h.parent_rpc_id = (i % 10 == 0) ? kRootParent : rng.next();
    if (decode_header(encode_header(h)) != h) ++bad;
  }
  const double s = seconds_since(t0);
  return {bad == 0 && s < 1.0, fmt("10000 headers, %zu mismatches, %.3fs", bad, s)};
}

Result c2_causality() {
  ServingScenario sc;
  sc.seed = 202;
  sc.sessions = 1000;
  sc.random_blueprints = true;
  sc.clock_offset_max_us = 20000;
  const auto t0 = SteadyClock::now();
  const SessionBundle b = generate_sessions(sc);
  const auto sessions = assemble(b);
  std::size_t errors = 0, sib = 0, red = 0, mixes[2] = {0, 0};
  for (const auto& truth : b.truth) {
    ExecutionGraph g = build_execution_graph(sessions.at(truth.session_id).trace);
    infer_all(g);
    std::set<std::pair<RpcId, RpcId>> siblings;
    std::set<RpcId> contrib, late;
    for (const auto& l : g.links) {
      if (l.kind == LinkKind::kSiblingSerialization) siblings.insert({g.edges[l.from].rpc_id, g.edges[l.to].rpc_id});
      if (l.kind == LinkKind::kRedundancyContribution) contrib.insert(g.edges[l.from].rpc_id);
    }
    for (std::size_t i : g.non_causal) late.insert(g.edges[i].rpc_id);
    errors += sym_diff(siblings, truth.serialization) + sym_diff(contrib, truth.contributors) +
              sym_diff(late, truth.late);
    sib += truth.serialization.size();
    red += truth.late.size();
    mixes[0] += !truth.serialization.empty();
    mixes[1] += !truth.late.empty();
  }
  const double s = seconds_since(t0);
  return {errors == 0 && s < 30.0,
          fmt("1000 sessions (%zu with serial, %zu with redundant), %zu serialization + %zu late truths, "
              "%zu errors, %.1fs",
              mixes[0], mixes[1], sib, red, errors, s)};
}

CallSpec leaf(const std::string& s, SimRng& rng) {
  CallSpec c;
  c.service = s;
  c.compute = {rng.uniform(0.1, 3.0), rng.uniform(0.0, 0.8)};
  return c;
}

Result c3_critpath_vs_enumeration() {
  SimRng rng(303);
  std::size_t compared = 0, mismatches = 0, random_graphs = 0;
  // Half from the simulator (consistent clocks), half with arbitrary edge
  // timestamps, which exercises clamping and partial walks.
  while (compared < 250) {
    ServingScenario sc;
    sc.seed = rng.next();
    sc.sessions = 1;
    sc.clock_offset_max_us = 1000;
    CallSpec root = leaf("fe", rng);
    const int shape = static_cast<int>(rng.uniform_int(0, 2));
    if (shape == 0) {
      root.calls = {leaf("a", rng), leaf("b", rng)};
      const int f = static_cast<int>(rng.uniform_int(0, 2));
      root.fanout = f == 0 ? "serial" : (f == 1 ? "parallel" : "redundant");
    } else if (shape == 1) {
      CallSpec a = leaf("a", rng);
      a.calls = {leaf("b", rng)};
      root.calls = {a};
    } else {
      root.calls = {leaf("a", rng)};
    }
    sc.blueprint = root;
    const SessionBundle b = generate_sessions(sc);
    for (const auto& [id, s] : assemble(b)) {
      if (s.trace.edges.size() > 12) continue;
      ExecutionGraph g = build_execution_graph(s.trace);
      infer_all(g);
      const auto want = oracle::longest_walk(g);
      if (!want) continue;
      const CriticalPath got = critical_path(g);
      ++compared;
      if (got.total_latency_us != want->total || got.segments != want->segments) ++mismatches;
    }
  }
  while (random_graphs < 250) {
    SessionTrace t;
    t.session_id = {rng.next(), rng.next()};
    const std::vector<std::string> nodes = {"fe@h1", "a@h2", "b@h3"};
    auto edge = [&](RpcId rpc, RpcId parent, const std::string& node, Direction d) {
      RpcEdgeRecord e;
      e.session_id = t.session_id;
      e.rpc_id = rpc;
      e.parent_rpc_id = parent;
      e.node = node;
      e.direction = d;
      const std::int64_t f = rng.uniform_int(0, 1000);
      e.first_byte = {f, node};
      e.last_byte = {f + rng.uniform_int(0, 20), node};
      if (!rng.bernoulli(0.08)) t.edges.push_back(e);
    };
    const RpcId root = 0x1000;
    edge(root, kRootParent, nodes[0], Direction::kRequestIn);
    edge(root, kRootParent, nodes[0], Direction::kResponseOut);
    const int kids = static_cast<int>(rng.uniform_int(1, 2));
    for (int k = 0; k < kids; ++k) {
      const RpcId c = 0x2000 + static_cast<RpcId>(k);
      const std::string& callee = nodes[static_cast<std::size_t>(1 + k)];
      edge(c, root, nodes[0], Direction::kRequestOut);
      edge(c, root, callee, Direction::kRequestIn);
      edge(c, root, callee, Direction::kResponseOut);
      edge(c, root, nodes[0], Direction::kResponseIn);
    }
    if (t.edges.empty()) continue;
    ExecutionGraph g = build_execution_graph(t);
    infer_all(g);
    const auto want = oracle::longest_walk(g);
    if (!want) continue;  // cyclic: no longest walk to compare
    const CriticalPath got = critical_path(g);
    ++random_graphs;
    if (got.total_latency_us != want->total || got.segments != want->segments) ++mismatches;
  }
  return {mismatches == 0, fmt("%zu simulator + %zu random graphs (<=12 edges), %zu mismatches", compared,
                               random_graphs, mismatches)};
}

CallSpec serving_blueprint() {
  CallSpec fe{"frontend", {1.0, 0.2}, "serial", 1, 400, 4000, {}};
  CallSpec auth{"auth", {0.8, 0.2}, "serial", 1, 300, 500, {}};
  CallSpec agg{"aggregator", {0.5, 0.2}, "parallel", 1, 400, 4000, {}};
  CallSpec search{"search", {4.0, 0.3}, "serial", 1, 400, 8000, {{"index", {2.0, 0.3}, "serial", 1, 200, 4000, {}}}};
  CallSpec ads{"ads", {3.0, 0.3}, "serial", 1, 400, 2000, {}};
  CallSpec profile{"profile", {2.0, 0.3}, "redundant", 1, 300, 1000,
                   {{"kv", {1.0, 0.5}, "serial", 1, 100, 500, {}}, {"kv", {1.0, 0.5}, "serial", 1, 100, 500, {}}}};
  agg.calls = {search, ads, profile};
  fe.calls = {auth, agg};
  return fe;
}

Result c4_slow_service() {
  ServingScenario sc;
  sc.seed = 404;
  sc.sessions = 1000;
  sc.blueprint = serving_blueprint();
  sc.placement = {{"frontend", "h0-0-0"}, {"auth", "h0-0-1"}, {"aggregator", "h0-1-0"}, {"search", "h1-0-0"},
                  {"index", "h1-0-1"}, {"ads", "h1-1-0"},     {"profile", "h1-1-1"},     {"kv", "h0-0-1"}};
  sc.slow = SlowService{"ads", 200.0, 0.5};
  sc.clock_offset_max_us = 30000;
  const SessionBundle b = generate_sessions(sc);
  const auto sessions = assemble(b);
  std::size_t affected = 0, top = 0;
  for (const auto& t : b.truth) {
    if (!t.slow_on_path) continue;
    ++affected;
    const auto& trace = sessions.at(t.session_id).trace;
    ExecutionGraph g = build_execution_graph(trace);
    infer_all(g);
    const auto path = critical_path(g);
    const auto contrib = service_contributions(path, end_to_end_latency(trace).latency_us);
    if (!contrib.empty() && contrib.front().service == "ads") ++top;
  }
  const double frac = affected ? static_cast<double>(top) / static_cast<double>(affected) : 0.0;
  return {affected > 0 && frac >= 0.99,
          fmt("ads top contributor in %zu/%zu affected sessions (%.2f%%)", top, affected, 100 * frac)};
}

// Queueing delay per rpc for one bundle, in sender-time order.
std::map<std::pair<SessionId, RpcId>, std::int64_t> estimate_delays(const SessionBundle& b) {
  std::map<std::pair<SessionId, RpcId>, std::pair<const RpcEdgeRecord*, const RpcEdgeRecord*>> req;
  for (const auto& r : b.records) {
    const auto* e = std::get_if<RpcEdgeRecord>(&r.record);
    if (!e) continue;
    if (e->direction == Direction::kRequestOut) req[{e->session_id, e->rpc_id}].first = e;
    if (e->direction == Direction::kRequestIn) req[{e->session_id, e->rpc_id}].second = e;
  }
  struct Obs {
    DelaySample s;
    std::pair<SessionId, RpcId> key;
    std::string a, bnode;
  };
  std::vector<Obs> obs;
  for (const auto& [k, pr] : req) {
    if (pr.first && pr.second) obs.push_back({request_delta(*pr.first, *pr.second), k, pr.first->node, pr.second->node});
  }
  std::sort(obs.begin(), obs.end(), [](const Obs& x, const Obs& y) {
    return std::tie(x.s.at_us, x.key) < std::tie(y.s.at_us, y.key);
  });
  DelayHistory hist(60'000'000);
  std::map<std::pair<SessionId, RpcId>, std::int64_t> out;
  for (const auto& o : obs) {
    hist.add(o.a, o.bnode, o.s);
    if (auto d = hist.queueing_delay(o.a, o.bnode, o.s)) out[o.key] = *d;
  }
  return out;
}

Result c5_link_delays() {
  ServingScenario sc;
  sc.seed = 505;
  sc.sessions = 1000;
  sc.blueprint = serving_blueprint();
  sc.placement = {{"frontend", "h0-0-0"}, {"auth", "h0-0-1"}, {"aggregator", "h0-1-0"}, {"search", "h1-0-0"},
                  {"index", "h1-0-1"}, {"ads", "h1-1-0"},     {"profile", "h1-1-1"},     {"kv", "h0-0-1"}};
  sc.queues = {{"aggregator", "search", 0.7, 1.3, 0.3}, {"frontend", "auth", 0.7, 1.3, 0.3}};
  const SessionBundle clean = generate_sessions(sc);
  sc.clock_offset_max_us = 250000;
  const SessionBundle shifted = generate_sessions(sc);
  const auto d0 = estimate_delays(clean);
  const auto d1 = estimate_delays(shifted);
  double abs_err = 0;
  std::size_t n = 0;
  for (const auto& t : clean.truth) {
    for (const auto& r : t.rpcs) {
      if (r.injected_queue_us <= 0) continue;
      auto it = d0.find({t.session_id, r.rpc_id});
      if (it == d0.end()) continue;
      abs_err += std::abs(static_cast<double>(it->second - r.injected_queue_us));
      ++n;
    }
  }
  const double mae_ms = n ? abs_err / static_cast<double>(n) / 1000.0 : 1e9;
  const bool identical = d0 == d1 && !d0.empty();
  return {n > 0 && mae_ms <= 0.2 && identical,
          fmt("%zu queued rpcs, MAE %.4f ms; with clock offsets up to 250ms delays %s", n, mae_ms,
              identical ? "bit-identical" : "DIFFER")};
}

Result c6_quartiles() {
  SimRng rng(606);
  std::size_t q_bad = 0, v_bad = 0;
  for (int h = 0; h < 10000; ++h) {
    DetectConfig cfg;
    cfg.reservoir = static_cast<std::size_t>(rng.bernoulli(0.5) ? rng.uniform_int(1, 64) : 4096);
    cfg.min_samples = static_cast<std::size_t>(rng.uniform_int(1, 30));
    cfg.k = rng.uniform(0.5, 3.0);
    BaselineStore store(cfg);
    const BaselineKey key = {"p"};
    const auto len = rng.uniform_int(1, 200);
    std::vector<double> all;
    for (std::int64_t i = 0; i < len; ++i) {
      // Integer-valued samples half the time, so ties are common.
      double v = rng.bernoulli(0.5) ? static_cast<double>(rng.uniform_int(1, 20)) : rng.uniform(1.0, 1000.0);
      all.push_back(v);
      store.update_baseline(key, v);
    }
    std::vector<double> kept(all.end() - static_cast<std::ptrdiff_t>(std::min(all.size(), cfg.reservoir)), all.end());
    const double x = rng.uniform(0.0, 1200.0);
    const Detection d = store.detect_session(key, x);
    if (d.q1 != oracle::quantile(kept, 0.25) || d.q3 != oracle::quantile(kept, 0.75)) ++q_bad;
    if (std::string(to_string(d.verdict)) != oracle::fence(kept, cfg.k, cfg.min_samples, x)) ++v_bad;
  }
  return {q_bad == 0 && v_bad == 0,
          fmt("10000 histories: %zu quartile mismatches, %zu fence mismatches", q_bad, v_bad)};
}

TemplateTimeseries series_of(const SyslogBundle& b) {
  TemplateTimeseries ts(1'000'000);
  for (const auto& m : b.messages) ts.add(m);
  return ts;
}

Result c7_rule_mining() {
  RuleCorpusScenario sc;
  sc.seed = 707;
  const auto t0 = SteadyClock::now();
  const SyslogBundle b = generate_rule_corpus(sc);
  const Topology topo(b.topology);
  const auto mined = mine_causal_rules(series_of(b), &topo, MiningConfig{});
  std::set<std::tuple<std::string, std::string, RuleScope>> planted, got;
  for (const auto& r : b.rules) planted.insert({r.cause, r.effect, r.scope});
  for (const auto& r : mined) got.insert({r.cause, r.effect, r.scope});
  std::size_t tp = 0;
  for (const auto& r : got) tp += planted.count(r);
  const double recall = static_cast<double>(tp) / static_cast<double>(planted.size());
  const double precision = got.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(got.size());

  std::vector<std::future<bool>> runs;
  for (int s = 0; s < 100; ++s) {
    runs.push_back(std::async(std::launch::async, [s] {
      RuleCorpusScenario ind;
      ind.seed = 10000 + static_cast<std::uint64_t>(s);
      ind.independent = true;
      const SyslogBundle bi = generate_rule_corpus(ind);
      const Topology ti(bi.topology);
      return mine_causal_rules(series_of(bi), &ti, MiningConfig{}).empty();
    }));
  }
  std::size_t clean_seeds = 0;
  for (auto& r : runs) clean_seeds += r.get() ? 1 : 0;
  return {recall >= 0.9 && precision >= 0.9 && clean_seeds >= 95,
          fmt("%zu messages: recall %.2f precision %.2f (%zu mined); independent streams rule-free in %zu/100 "
              "seeds; %.1fs",
              b.messages.size(), recall, precision, got.size(), clean_seeds, seconds_since(t0))};
}

using EdgeSet = std::set<std::pair<std::string, std::string>>;

EdgeSet edges_of(const ProblemGraph& g) {
  EdgeSet out;
  for (const auto& e : g.edges) {
    out.insert({g.nodes[e.from].template_id + "@" + g.nodes[e.from].device,
                g.nodes[e.to].template_id + "@" + g.nodes[e.to].device});
  }
  return out;
}

Result c8_problem_graphs() {
  const CascadeBundle md = multi_device_cascade(5'000'000);
  const Topology t1(md.syslog.topology);
  const auto g1 = mine_problem_graphs(md.syslog.messages, md.syslog.rules, &t1);
  const EdgeSet want1 = {{"MODULE_FAIL@tor0-0", "LINK_DOWN@tor0-0"},
                         {"LINK_DOWN@tor0-0", "STP_CHANGE@tor0-0"},
                         {"LINK_DOWN@tor0-0", "IF_CHANGE@agg0-0"}};
  const bool ok1 = g1.size() == 1 && g1[0].nodes.size() == 4 && edges_of(g1[0]) == want1;

  const CascadeBundle fl = l2_flap(5'000'000);
  const Topology t2(fl.syslog.topology);
  ProblemGraphStats st2;
  const auto g2 = mine_problem_graphs(fl.syslog.messages, fl.syslog.rules, &t2, {}, &st2);
  const EdgeSet want2 = {{"LINK_DOWN@tor0-1", "LINK_UP@tor0-1"}};
  const bool ok2 = g2.size() == 1 && g2[0].nodes.size() == 2 && edges_of(g2[0]) == want2;

  CascadeScenario sc;
  sc.seed = 808;
  sc.cascades = 10000;
  const CascadeBundle mix = generate_cascades(sc);
  const Topology t3(mix.syslog.topology);
  const auto graphs = mine_problem_graphs(mix.syslog.messages, mix.syslog.rules, &t3);
  std::map<std::string, double> injected, mined;
  for (const auto& t : mix.truth) injected[std::string(to_string(t.tier))] += 1.0;
  for (std::size_t i = 0; i < graphs.size(); ++i) mined[summarize(graphs[i], i, &t3).tier] += 1.0;
  double worst = 0;
  std::set<std::string> tiers;
  for (const auto& [k, _] : injected) tiers.insert(k);
  for (const auto& [k, _] : mined) tiers.insert(k);
  std::string hist;
  for (const auto& k : tiers) {
    const double a = injected[k] / static_cast<double>(mix.truth.size());
    const double m = graphs.empty() ? 0.0 : mined[k] / static_cast<double>(graphs.size());
    worst = std::max(worst, std::abs(a - m));
    hist += fmt(" %s %.3f/%.3f", k.c_str(), m, a);
  }
  return {ok1 && ok2 && graphs.size() == mix.truth.size() && worst <= 0.03,
          fmt("cascade %s, L2 flap %s (%zu cycle edge dropped); %zu graphs for %zu cascades, tier mined/injected:%s, "
              "max deviation %.3f",
              ok1 ? "ok" : "WRONG", ok2 ? "ok" : "WRONG", st2.dropped_cycle_edges, graphs.size(), mix.truth.size(),
              hist.c_str(), worst)};
}

oracle::Ast random_ast(SimRng& rng, int depth, int vars) {
  oracle::Ast a;
  if (depth <= 1 || rng.bernoulli(0.25)) {
    a.op = oracle::Ast::kVar;
    a.var = static_cast<int>(rng.uniform_int(0, vars - 1));
    return a;
  }
  const auto k = rng.uniform_int(0, 2);
  a.op = k == 0 ? oracle::Ast::kNot : (k == 1 ? oracle::Ast::kAnd : oracle::Ast::kOr);
  a.kids.push_back(random_ast(rng, depth - 1, vars));
  if (a.op != oracle::Ast::kNot) a.kids.push_back(random_ast(rng, depth - 1, vars));
  return a;
}

Result c9_dsl() {
  namespace fs = std::filesystem;
  const fs::path root = fs::path(TRACEKIT_TEST_DATA) / "dsl";
  std::size_t valid = 0, invalid = 0, wrong = 0;
  std::string wrong_files;
  for (const char* kind : {"valid", "invalid"}) {
    for (const auto& e : fs::directory_iterator(root / kind)) {
      std::ifstream in(e.path());
      std::stringstream ss;
      ss << in.rdbuf();
      bool parsed = true;
      try {
        RuleSet rs = parse_rules(ss.str());
        // Printing must reparse to the same rules.
        if (parse_rules(to_string(rs)) != rs) parsed = false;
      } catch (const Error&) {
        parsed = false;
      }
      const bool want = std::string(kind) == "valid";
      (want ? valid : invalid)++;
      if (parsed != want) {
        ++wrong;
        wrong_files += " " + e.path().filename().string();
      }
    }
  }
  SimRng rng(909);
  std::size_t asts = 0, eval_bad = 0;
  const int vars = 4;
  for (int i = 0; i < 2000; ++i) {
    const oracle::Ast a = random_ast(rng, static_cast<int>(rng.uniform_int(1, 5)), vars);
    std::string text;
    for (int v = 0; v < vars; ++v) text += "SYMPTOM s" + std::to_string(v) + "\n";
    text += "PATHOLOGY p DEF " + oracle::render(a) + "\n";
    RuleSet rs;
    try {
      rs = parse_rules(text);
    } catch (const Error&) {
      ++eval_bad;
      continue;
    }
    ++asts;
    std::vector<int> assign(vars, 0);
    for (int code = 0; code < 81; ++code) {
      int c = code;
      std::map<std::string, Tri> values;
      for (int v = 0; v < vars; ++v) {
        assign[static_cast<std::size_t>(v)] = c % 3;
        c /= 3;
        values["s" + std::to_string(v)] = assign[static_cast<std::size_t>(v)] == 0   ? Tri::kFalse
                                          : assign[static_cast<std::size_t>(v)] == 1 ? Tri::kTrue
                                                                                      : Tri::kUnknown;
      }
      const Tri got = evaluate(rs, values).at(0).value;
      const int want = oracle::eval(a, assign);
      const int g = got == Tri::kFalse ? 0 : (got == Tri::kTrue ? 1 : 2);
      if (g != want) {
        ++eval_bad;
        break;
      }
    }
  }
  return {valid >= 30 && invalid >= 20 && wrong == 0 && eval_bad == 0,
          fmt("corpus %zu valid + %zu invalid, %zu misclassified%s; %zu random ASTs x 81 assignments, %zu mismatches",
              valid, invalid, wrong, wrong_files.c_str(), asts, eval_bad)};
}

Result c10_internet() {
  SimRng rng(1010);
  std::size_t bound_bad = 0;
  for (int i = 0; i < 100000; ++i) {
    RpcLatencyDecomposition d;
    d.delta_fb_us = rng.uniform_int(0, 2'000'000);
    d.delta_cdn_us = rng.uniform_int(0, 500'000);
    d.delta_be_us = rng.bernoulli(0.5) ? 0 : rng.uniform_int(0, 500'000);
    d.delta_rto_us = rng.uniform_int(0, 1'000'000);
    const std::int64_t direct = d.delta_fb_us - d.delta_cdn_us - d.delta_be_us - d.delta_rto_us;
    if (download_stack_bound(d) != (direct > 0 ? direct : 0)) ++bound_bad;
  }
  ServingScenario sc;
  sc.seed = 1011;
  sc.sessions = 2000;
  sc.cdn.enabled = true;
  sc.clock_offset_max_us = 100000;
  const SessionBundle b = generate_sessions(sc);
  const auto sessions = assemble(b);
  std::size_t total = 0, correct = 0, stack_bad = 0;
  for (const auto& t : b.truth) {
    const auto& trace = sessions.at(t.session_id).trace;
    ExecutionGraph g = build_execution_graph(trace);
    const auto findings = diagnose_internet(trace, g);
    for (const auto& r : t.rpcs) {
      if (!r.bottleneck) continue;
      ++total;
      auto it = std::find_if(findings.begin(), findings.end(), [&](const InternetFinding& f) { return f.rpc_id == r.rpc_id; });
      if (it == findings.end()) continue;
      if (it->bottleneck == *r.bottleneck) ++correct;
      if (it->download_stack_bound_us > r.stack_delay_us ||
          it->download_stack_bound_us < r.stack_delay_us - it->delta_rto_us) {
        ++stack_bad;
      }
    }
  }
  const double acc = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  return {bound_bad == 0 && acc >= 0.95 && stack_bad == 0,
          fmt("bound formula: %zu/100000 mismatches; bottleneck accuracy %.2f%% (%zu/%zu); stack bound outside "
              "[D - rto, D]: %zu",
              bound_bad, 100 * acc, correct, total, stack_bad)};
}

Result c11_assembly() {
  ServingScenario sc;
  sc.seed = 1111;
  sc.sessions = 1000;
  sc.random_blueprints = true;
  sc.clock_offset_max_us = 10000;
  const SessionBundle clean = generate_sessions(sc);
  sc.shuffle = true;
  sc.loss_rate = 0.01;
  sc.duplication_rate = 0.01;
  const SessionBundle noisy = generate_sessions(sc);
  const auto a = assemble(clean);
  const auto b = assemble(noisy);
  std::size_t identical = 0, lossless = 0, lossy = 0, flag_bad = 0, content_bad = 0, dups = 0;
  for (const auto& t : noisy.truth) {
    dups += t.duplicated;
    const auto& ca = a.at(t.session_id);
    auto it = b.find(t.session_id);
    if (it == b.end()) {
      // Every record lost: nothing to assemble, which is only right if
      // something was injected.
      if (t.lost == 0) ++content_bad;
      continue;
    }
    const auto& nb = it->second;
    if (t.lost == 0) {
      ++lossless;
      if (nb.trace == ca.trace) {
        ++identical;
      } else {
        ++content_bad;
      }
    } else {
      ++lossy;
    }
    if (nb.trace.assembled_complete == t.edge_lost) ++flag_bad;
  }
  return {content_bad == 0 && flag_bad == 0 && identical == lossless,
          fmt("%zu lossless sessions identical to clean (%zu/%zu), %zu lossy, %zu duplicates injected, %zu "
              "completeness-flag mismatches",
              identical, identical, lossless, lossy, dups, flag_bad)};
}

Result c12_overhead() {
  NullSink sink;
  ManualClock clock(1);
  Tracer t("svc@host", sink, clock, 42);
  std::vector<std::int64_t> ns;
  ns.reserve(1'000'000);
  auto timed = [&](auto&& fn) {
    const auto t0 = SteadyClock::now();
    fn();
    ns.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(SteadyClock::now() - t0).count());
  };
  while (ns.size() < 1'000'000) {
    SessionContext ctx;
    timed([&] { ctx = t.create(""); });
    std::string h;
    timed([&] { h = t.sendtonext(ctx); });
    timed([&] { t.recvfromnext(ctx, h); });
    timed([&] { t.annotate(ctx, "k", "v"); });
    timed([&] { t.sendtoprev(ctx); });
  }
  std::sort(ns.begin(), ns.end());
  const double p99_us = static_cast<double>(ns[ns.size() * 99 / 100]) / 1000.0;
  const double p50_us = static_cast<double>(ns[ns.size() / 2]) / 1000.0;
  return {p99_us < 50.0, fmt("%zu calls, p50 %.3f us, p99 %.3f us", ns.size(), p50_us, p99_us)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
      {"header codec round-trip", c1_header_roundtrip},
      {"causality inference vs simulator truth", c2_causality},
      {"critical path vs exhaustive walk enumeration", c3_critpath_vs_enumeration},
      {"injected slow service is top contributor", c4_slow_service},
      {"per-link queueing delay recovery", c5_link_delays},
      {"streaming quartiles and IQR fence", c6_quartiles},
      {"causal rule mining recall/precision", c7_rule_mining},
      {"problem graphs and tier histogram", c8_problem_graphs},
      {"rule DSL corpus and three-valued evaluation", c9_dsl},
      {"download-stack bound and bottleneck classification", c10_internet},
      {"assembly under reordering, loss and duplication", c11_assembly},
      {"tracing call overhead", c12_overhead},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(n)) continue;
    Result r;
    const auto t0 = SteadyClock::now();
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2d  %-52s %s [%.2fs]\n", r.pass ? "PASS" : "FAIL", n, criteria[i].first.c_str(),
                r.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += r.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
