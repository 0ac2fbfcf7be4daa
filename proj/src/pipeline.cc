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

#include "tracekit/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "tracekit/causality.h"
#include "tracekit/codec.h"
#include "tracekit/critpath.h"
#include "tracekit/errors.h"
#include "tracekit/inetdiag.h"
#include "tracekit/problem_graph.h"
#include "tracekit/queueing.h"

namespace tracekit {

void PipelineConfig::validate() const {
  detect.validate();
  if (queue_window_us <= 0) throw ValidationError("queue window must be positive");
  if (rpc_threshold <= 0) throw ValidationError("rpc threshold must be positive");
  if (top_k < 1) throw ValidationError("top-k must be >= 1");
  if (jobs < 1) throw ValidationError("jobs must be >= 1");
}

namespace {

const RpcEdgeRecord* root_request(const SessionTrace& t) {
  const RpcEdgeRecord* best = nullptr;
  for (const auto& e : t.edges) {
    if (e.parent_rpc_id != kRootParent || e.direction != Direction::kRequestIn) continue;
    if (best == nullptr || e.first_byte.micros < best->first_byte.micros) best = &e;
  }
  return best;
}

std::int64_t start_of(const SessionTrace& t) {
  if (const auto* r = root_request(t)) return r->first_byte.micros;
  std::int64_t s = 0;
  bool any = false;
  for (const auto& e : t.edges) {
    if (!any || e.first_byte.micros < s) s = e.first_byte.micros;
    any = true;
  }
  return s;
}

using RpcKey = std::pair<SessionId, RpcId>;

struct Prepared {
  AssembledSession session;
  std::uint64_t generation = 0;
  std::int64_t start_us = 0;
  bool deferred = false;
  std::string defer_reason;
  EndToEnd e2e;
  Detection detection;
  std::vector<std::string> notes;
};

// Queueing delay for every rpc with both request edges, computed over all
// sessions in sender-time order so the result does not depend on workers.
std::map<RpcKey, std::int64_t> queueing_delays(const std::vector<Prepared>& prep, std::int64_t window_us) {
  struct Obs {
    std::string a, b;
    DelaySample s;
    RpcKey key;
  };
  std::vector<Obs> obs;
  for (const auto& p : prep) {
    if (p.deferred) continue;
    const auto& t = p.session.trace;
    std::map<RpcId, std::pair<const RpcEdgeRecord*, const RpcEdgeRecord*>> req;
    for (const auto& e : t.edges) {
      if (e.direction == Direction::kRequestOut) req[e.rpc_id].first = &e;
      if (e.direction == Direction::kRequestIn) req[e.rpc_id].second = &e;
    }
    for (const auto& [id, pr] : req) {
      if (pr.first && pr.second) {
        obs.push_back({pr.first->node, pr.second->node, request_delta(*pr.first, *pr.second), {t.session_id, id}});
      }
    }
  }
  std::stable_sort(obs.begin(), obs.end(), [](const Obs& x, const Obs& y) {
    return std::tie(x.s.at_us, x.key) < std::tie(y.s.at_us, y.key);
  });
  DelayHistory hist(window_us);
  std::map<RpcKey, std::int64_t> out;
  for (std::size_t i = 0; i < obs.size();) {
    std::size_t j = i;
    // Samples at the same instant are all inside each other's window.
    while (j < obs.size() && obs[j].s.at_us == obs[i].s.at_us) hist.add(obs[j].a, obs[j].b, obs[j].s), ++j;
    for (std::size_t k = i; k < j; ++k) {
      if (auto d = hist.queueing_delay(obs[k].a, obs[k].b, obs[k].s)) out[obs[k].key] = *d;
    }
    i = j;
  }
  return out;
}

std::string bias_reason(const SessionStore& store, const SessionId& id) {
  const auto& vol = store.volume();
  const std::int64_t last_window = vol.window_of(store.max_arrival_ms());
  const std::int64_t width = store.config().bias_window_ms;
  for (const auto& [key, window] : store.volume_cells(id)) {
    double covered = 1.0;
    if (window == last_window) {
      covered = static_cast<double>(store.max_arrival_ms() - window * width + 1) / static_cast<double>(width);
    }
    const BiasResult b = vol.volume_bias(key, window, covered);
    if (b.biased) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "analysis deferred: volume bias for %s@%s in window %lld (observed %.0f, expected %.1f)",
                    key.service.c_str(), key.datacenter.c_str(), static_cast<long long>(window), b.observed, b.expected);
      return buf;
    }
  }
  return {};
}

DiagnosisReport analyze(const Prepared& p, const NetworkInputs& net, const BoundRuleSet* rules,
                        const PipelineConfig& cfg, const std::map<RpcKey, std::int64_t>& delays) {
  DiagnosisReport rep;
  const auto& trace = p.session.trace;
  rep.session_id = trace.session_id;
  rep.start_us = p.start_us;
  rep.detection = p.detection;
  rep.notes = p.notes;
  for (const auto& g : p.session.gaps) rep.notes.push_back("incomplete: " + g);

  if (trace.navtiming && trace.navtiming->onload_ms > 0) {
    rep.content_findings = content_diagnosis(*trace.navtiming, cfg.detect.content_threshold);
  }

  ExecutionGraph g = build_execution_graph(trace);
  infer_all(g);
  rep.critical_path = critical_path(g);
  if (p.e2e.latency_us > 0 && !rep.critical_path.segments.empty()) {
    rep.contributions = service_contributions(rep.critical_path, p.e2e.latency_us);
    if (rep.contributions.size() > cfg.top_k) rep.contributions.resize(cfg.top_k);
  }

  std::set<RpcId> on_path;
  for (const auto& s : rep.critical_path.segments) on_path.insert(s.rpc_id);
  for (const auto& r : g.rpcs) {
    if (!r.request_out || !r.request_in) continue;
    NetworkFinding f;
    f.rpc_id = r.rpc_id;
    f.caller = r.caller;
    f.callee = r.callee;
    f.on_critical_path = on_path.count(r.rpc_id) != 0;
    auto it = delays.find({trace.session_id, r.rpc_id});
    if (it != delays.end()) {
      f.queueing_delay_us = it->second;
      if (p.e2e.latency_us > 0) f.flagged = detect_rpc_problem(it->second, p.e2e.latency_us, cfg.rpc_threshold);
    }
    if (f.flagged && net.topology != nullptr) {
      try {
        f.candidate_devices = net.topology->candidate_devices(host_of(r.caller), host_of(r.callee));
        const auto& out = g.edges[*r.request_out];
        std::int64_t end = out.last_byte.micros;
        if (r.response_in) end = std::max(end, g.edges[*r.response_in].last_byte.micros);
        f.possible_problems = correlate_rpc_problems(f.candidate_devices, net.problems, out.first_byte.micros, end);
      } catch (const NotFoundError& e) {
        rep.notes.push_back("rpc " + rpc_hex(r.rpc_id) + ": " + e.what());
      }
    }
    rep.network_findings.push_back(std::move(f));
  }

  rep.internet_findings = diagnose_internet(trace, g);

  if (rules != nullptr) {
    for (const auto& [name, v] : rules->symptoms(rep)) rep.symptoms[name] = std::string(to_string(v));
    rep.pathologies = matched(rules->evaluate(rep));
  }
  return rep;
}

}  // namespace

BaselineKey baseline_key(const SessionTrace& trace) {
  std::string page = "unknown";
  std::string dc = "unknown";
  const auto* root = root_request(trace);
  if (root != nullptr) {
    dc = datacenter_of(host_of(root->node));
    for (const auto& a : trace.annotations) {
      if (a.key == "page" && a.rpc_id == root->rpc_id) {
        page = a.value;
        break;
      }
    }
  }
  const std::int64_t hour_us = 3'600'000'000LL;
  std::int64_t h = (start_of(trace) / hour_us) % 24;
  if (h < 0) h += 24;
  return {page, dc, "h" + std::to_string(h)};
}

std::vector<DiagnosisReport> diagnose_sessions(SessionStore& store, BaselineStore& baselines,
                                               const NetworkInputs& net, const BoundRuleSet* rules,
                                               const PipelineConfig& cfg, std::int64_t now_ms,
                                               DiagnoseStats* stats) {
  cfg.validate();
  DiagnoseStats local;
  DiagnoseStats& st = stats ? *stats : local;
  st = {};

  std::vector<Prepared> prep;
  for (const auto& id : store.ready_sessions(now_ms)) {
    if (!store.needs_analysis(id)) continue;
    ++st.ready;
    Prepared p;
    p.generation = store.generation(id);
    p.session = store.assemble_session(id);
    p.start_us = start_of(p.session.trace);
    p.defer_reason = bias_reason(store, id);
    p.deferred = !p.defer_reason.empty();
    prep.push_back(std::move(p));
  }
  std::stable_sort(prep.begin(), prep.end(), [](const Prepared& a, const Prepared& b) {
    return std::tie(a.start_us, a.session.trace.session_id) < std::tie(b.start_us, b.session.trace.session_id);
  });

  // Sequential: each session is judged against the baseline of the
  // sessions that started before it.
  for (auto& p : prep) {
    if (p.deferred) continue;
    p.e2e = end_to_end_latency(p.session.trace);
    const BaselineKey key = baseline_key(p.session.trace);
    if (p.e2e.latency_us <= 0) {
      p.detection.baseline_key = key;
      p.notes.push_back("no end-to-end latency; detection skipped");
      continue;
    }
    const double ms = static_cast<double>(p.e2e.latency_us) / 1000.0;
    p.detection = baselines.detect_session(key, ms);
    p.detection.e2e_source = p.e2e.source;
    if (p.e2e.source == "root_round_trip") p.notes.push_back("end-to-end latency from root round trip (no navtiming)");
    baselines.update_baseline(key, ms);
  }
  const auto delays = queueing_delays(prep, cfg.queue_window_us);

  std::vector<DiagnosisReport> out(prep.size());
  std::vector<std::string> errors(prep.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < prep.size(); i = next++) {
      const auto& p = prep[i];
      if (p.deferred) {
        out[i].session_id = p.session.trace.session_id;
        out[i].start_us = p.start_us;
        out[i].deferred = true;
        out[i].defer_reason = p.defer_reason;
        continue;
      }
      try {
        out[i] = analyze(p, net, rules, cfg, delays);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        out[i].session_id = p.session.trace.session_id;
        out[i].start_us = p.start_us;
        out[i].detection = p.detection;
        out[i].notes = {std::string("diagnosis failed: ") + e.what()};
      }
    }
  };
  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), std::max<std::size_t>(1, prep.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < prep.size(); ++i) {
    if (prep[i].deferred) {
      ++st.deferred;
      continue;
    }
    if (!errors[i].empty()) ++st.failed;
    ++st.diagnosed;
    out[i].revision = store.mark_analyzed(prep[i].session.trace.session_id, prep[i].generation);
  }
  std::sort(out.begin(), out.end(),
            [](const DiagnosisReport& a, const DiagnosisReport& b) { return a.session_id < b.session_id; });
  return out;
}

Rollups compute_rollups(const std::vector<DiagnosisReport>& reports) {
  Rollups r;
  for (const auto& rep : reports) {
    ++r.sessions;
    if (rep.deferred) {
      ++r.deferred;
      continue;
    }
    ++r.verdicts[std::string(to_string(rep.detection.verdict))];
    for (const auto& c : rep.contributions) {
      auto& s = r.services[c.service];
      ++s.sessions;
      s.latency_us += c.latency_us;
      s.fraction_sum += c.fraction;
    }
    std::set<std::size_t> graphs;
    for (const auto& f : rep.network_findings) {
      for (const auto& pg : f.possible_problems) {
        if (graphs.insert(pg.graph_id).second) ++r.tiers[pg.tier];
      }
    }
    for (const auto& f : rep.internet_findings) ++r.bottlenecks[std::string(to_string(f.bottleneck))];
    for (const auto& p : rep.pathologies) ++r.pathologies[p];
  }
  return r;
}

nlohmann::json rollups_to_json(const Rollups& r) {
  Json services = Json::object();
  for (const auto& [name, s] : r.services) {
    services[name] = {{"sessions", s.sessions},
                      {"latency_us", s.latency_us},
                      {"mean_fraction", s.sessions ? s.fraction_sum / static_cast<double>(s.sessions) : 0.0}};
  }
  return Json{{"type", "rollups"},        {"v", kFormatVersion},        {"sessions", r.sessions},
              {"deferred", r.deferred},   {"verdicts", r.verdicts},     {"services", services},
              {"tiers", r.tiers},         {"bottlenecks", r.bottlenecks}, {"pathologies", r.pathologies}};
}

std::vector<DiagnosisReport> filter_reports(const std::vector<DiagnosisReport>& reports, const ReportQuery& q) {
  std::vector<DiagnosisReport> out;
  for (const auto& r : reports) {
    if (q.from_us && r.start_us < *q.from_us) continue;
    if (q.to_us && r.start_us >= *q.to_us) continue;
    if (q.verdict && (r.deferred || to_string(r.detection.verdict) != *q.verdict)) continue;
    if (q.service && std::none_of(r.contributions.begin(), r.contributions.end(),
                                  [&](const Contribution& c) { return c.service == *q.service; })) {
      continue;
    }
    out.push_back(r);
  }
  return out;
}

std::string render_jsonl(const std::vector<DiagnosisReport>& reports) {
  std::string out;
  for (const auto& r : reports) out += to_jsonl(r) + "\n";
  out += rollups_to_json(compute_rollups(reports)).dump() + "\n";
  return out;
}

std::string render_table(const std::vector<DiagnosisReport>& reports) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-32s %-18s %10s %-22s %s\n", "session", "verdict", "e2e_ms", "top_service",
                "pathologies");
  os << buf;
  for (const auto& r : reports) {
    std::string verdict = r.deferred ? "deferred" : std::string(to_string(r.detection.verdict));
    std::string top = r.contributions.empty() ? "-" : r.contributions.front().service;
    std::string path;
    for (const auto& p : r.pathologies) path += (path.empty() ? "" : ",") + p;
    std::snprintf(buf, sizeof buf, "%-32s %-18s %10.3f %-22s %s\n", r.session_id.hex().c_str(), verdict.c_str(),
                  r.detection.e2e_ms, top.c_str(), path.empty() ? "-" : path.c_str());
    os << buf;
  }
  return os.str();
}

std::string render_rollups_table(const Rollups& r) {
  std::ostringstream os;
  char buf[256];
  os << "sessions " << r.sessions << "  deferred " << r.deferred << "\n";
  for (const auto& [v, n] : r.verdicts) os << "verdict " << v << " " << n << "\n";
  std::snprintf(buf, sizeof buf, "%-24s %8s %14s %10s\n", "service", "sessions", "latency_ms", "mean_frac");
  os << buf;
  for (const auto& [name, s] : r.services) {
    std::snprintf(buf, sizeof buf, "%-24s %8zu %14.3f %10.4f\n", name.c_str(), s.sessions,
                  static_cast<double>(s.latency_us) / 1000.0,
                  s.sessions ? s.fraction_sum / static_cast<double>(s.sessions) : 0.0);
    os << buf;
  }
  for (const auto& [t, n] : r.tiers) os << "tier " << t << " " << n << "\n";
  for (const auto& [b, n] : r.bottlenecks) os << "bottleneck " << b << " " << n << "\n";
  for (const auto& [p, n] : r.pathologies) os << "pathology " << p << " " << n << "\n";
  return os.str();
}

std::vector<DiagnosisReport> load_reports(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot read reports " + path);
  std::vector<DiagnosisReport> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DecodeError("malformed JSON in " + path, 0);
    if (j.value("type", "") != "report") continue;
    out.push_back(from_jsonl<DiagnosisReport>(line));
  }
  return out;
}

}  // namespace tracekit
