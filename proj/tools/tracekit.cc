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

// tracekit command-line front end.
//
// Settings are layered: config file (--config, TOML/INI) < flags <
// TRACEKIT_* environment variables. Exit codes: 0 ok, 1 fatal, 2 partial
// (some input quarantined).

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "tracekit/causality.h"
#include "tracekit/codec.h"
#include "tracekit/detect.h"
#include "tracekit/errors.h"
#include "tracekit/ingest.h"
#include "tracekit/pipeline.h"
#include "tracekit/problem_graph.h"
#include "tracekit/rootcause.h"
#include "tracekit/rule_mining.h"
#include "tracekit/sim.h"
#include "tracekit/syslog.h"
#include "tracekit/topology.h"

namespace fs = std::filesystem;
using namespace tracekit;

namespace {

constexpr int kOk = 0;
constexpr int kFatal = 1;
constexpr int kPartial = 2;

// Environment overrides, applied after flags so that they win.
struct EnvBinding {
  std::string var;
  std::function<void(const std::string&)> set;
};

template <class T>
void parse_env_value(const std::string& var, const std::string& s, T& into) {
  if constexpr (std::is_same_v<T, std::string>) {
    into = s;
  } else if constexpr (std::is_same_v<T, bool>) {
    std::string l = s;
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
    if (l == "1" || l == "true" || l == "yes" || l == "on") {
      into = true;
    } else if (l == "0" || l == "false" || l == "no" || l == "off") {
      into = false;
    } else {
      throw UsageError(var + ": expected a boolean, got '" + s + "'");
    }
  } else {
    std::istringstream in(s);
    T v{};
    in >> v;
    if (!in || !in.eof()) throw UsageError(var + ": cannot parse '" + s + "'");
    into = v;
  }
}

class Options {
 public:
  explicit Options(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& flag, T& var, const std::string& desc) {
    std::string env = "TRACEKIT_";
    for (char c : flag) env += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    env_.push_back({env, [&var, env](const std::string& s) { parse_env_value(env, s, var); }});
    if constexpr (std::is_same_v<T, bool>) {
      return app_->add_flag("--" + flag, var, desc + " [env " + env + "]");
    } else {
      return app_->add_option("--" + flag, var, desc + " [env " + env + "]")->capture_default_str();
    }
  }

  void apply_env() const {
    for (const auto& b : env_) {
      if (const char* v = std::getenv(b.var.c_str()); v != nullptr) b.set(v);
    }
  }

 private:
  CLI::App* app_;
  std::vector<EnvBinding> env_;
};

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw NotFoundError("cannot read " + p.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

TopologySnapshot load_topology(const std::string& path) {
  for (const auto& line : read_lines(path)) {
    if (!line.empty()) return from_jsonl<TopologySnapshot>(line);
  }
  throw ValidationError("topology file " + path + " is empty");
}

std::vector<CausalRule> load_causal_rules(const std::string& path) {
  std::vector<CausalRule> out;
  for (const auto& line : read_lines(path)) {
    if (!line.empty()) out.push_back(from_jsonl<CausalRule>(line));
  }
  return out;
}

struct SyslogInput {
  std::vector<SyslogMessage> messages;  // matched only
  std::size_t lines = 0;
  std::size_t malformed = 0;
  std::size_t unmatched = 0;
};

SyslogInput read_syslog(const std::vector<std::string>& files, const TemplateCorpus& corpus, int year) {
  SyslogInput in;
  for (const auto& f : files) {
    for (const auto& line : read_lines(f)) {
      if (line.empty()) continue;
      ++in.lines;
      SyslogMessage m;
      try {
        m = parse_syslog_line(line, year);
      } catch (const DecodeError&) {
        ++in.malformed;
        continue;
      }
      if (corpus.match(m)) {
        in.messages.push_back(std::move(m));
      } else {
        ++in.unmatched;
      }
    }
  }
  std::stable_sort(in.messages.begin(), in.messages.end(),
                   [](const SyslogMessage& a, const SyslogMessage& b) { return a.at.micros < b.at.micros; });
  return in;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::trunc);
      if (!file_) throw Error("cannot write " + path);
    }
  }
  std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

void check_format(const std::string& f) {
  if (f != "jsonl" && f != "table") throw UsageError("--format must be jsonl or table");
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::string preset;
  std::string out = "sim_out";
  std::int64_t seed = -1;
};

ScenarioFile preset_scenario(const std::string& name) {
  Json j;
  if (name == "serving") {
    j = {{"serving", {{"sessions", 200}, {"random_blueprints", true}, {"navtiming", true},
                      {"clock_offset_max_us", 50000}}}};
  } else if (name == "slow") {
    j = {{"serving", {{"sessions", 300}, {"random_blueprints", false}, {"blueprint",
          {{"service", "frontend"}, {"fanout", "parallel"}, {"calls",
            Json::array({{{"service", "search"}}, {{"service", "ads"}}, {{"service", "profile"}}})}}},
          {"slow_service", {{"service", "ads"}, {"extra_ms", 200}, {"fraction", 0.3}}}}}};
  } else if (name == "cdn") {
    j = {{"serving", {{"sessions", 200}, {"cdn", {{"enabled", true}}}}}};
  } else if (name == "syslog") {
    j = {{"syslog_rules", {{"messages", 20000}, {"horizon_s", 20000}, {"causes_min", 30}, {"causes_max", 60}}},
         {"cascades", {{"cascades", 100}}}};
  } else {
    throw UsageError("unknown preset '" + name + "' (serving, slow, cdn, syslog)");
  }
  return parse_scenario(j);
}

int cmd_simulate(const SimulateArgs& a) {
  if (a.scenario.empty() == a.preset.empty()) throw UsageError("give exactly one of --scenario or --preset");
  ScenarioFile sc = a.scenario.empty() ? preset_scenario(a.preset) : load_scenario(a.scenario);
  if (a.seed >= 0) {
    const auto s = static_cast<std::uint64_t>(a.seed);
    if (sc.serving) sc.serving->seed = s;
    if (sc.rules) sc.rules->seed = s;
    if (sc.cascades) sc.cascades->seed = s;
  }
  write_bundle(sc, a.out);
  std::cerr << "wrote bundle to " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string store = "store";
  std::int64_t delta_ms = 5000;
  std::int64_t bias_window_ms = 60000;
  double bias_tolerance = 0.1;
  std::int64_t arrival_ms = 0;
};

IngestConfig ingest_config(std::int64_t delta, std::int64_t window, double tol) {
  IngestConfig c;
  c.delta_ms = delta;
  c.bias_window_ms = window;
  c.bias_tolerance = tol;
  c.validate();
  return c;
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    fs::path p(in);
    if (fs::is_directory(p)) {
      if (fs::exists(p / "events.jsonl")) {
        out.push_back(p / "events.jsonl");
        continue;
      }
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.path().extension() == ".jsonl") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else if (fs::exists(p)) {
      out.push_back(p);
    } else {
      throw NotFoundError("no such input " + in);
    }
  }
  return out;
}

int cmd_ingest(const IngestArgs& a) {
  auto store = SessionStore::load(a.store, ingest_config(a.delta_ms, a.bias_window_ms, a.bias_tolerance));
  std::size_t lines = 0, inserted = 0, dup = 0, quarantined = 0;
  for (const auto& f : expand_inputs(a.inputs)) {
    for (const auto& line : read_lines(f)) {
      if (line.empty()) continue;
      ++lines;
      switch (store->ingest_line(line, a.arrival_ms)) {
        case SessionStore::Outcome::kInserted: ++inserted; break;
        case SessionStore::Outcome::kDuplicate: ++dup; break;
        case SessionStore::Outcome::kQuarantined: ++quarantined; break;
      }
    }
  }
  if (lines == 0) {
    std::cerr << "error: no input records\n";
    return kFatal;
  }
  store->save(a.store);
  std::cerr << "lines " << lines << " inserted " << inserted << " duplicates " << dup << " quarantined "
            << quarantined << " sessions " << store->sessions().size() << "\n";
  return quarantined > 0 ? kPartial : kOk;
}

// ---------------------------------------------------------------------------

struct MineArgs {
  std::vector<std::string> syslog;
  std::string templates;
  std::string topology;
  std::string out = "-";
  double bucket_s = 1.0;
  int year = 1970;
  double corr = MiningConfig{}.corr_threshold;
  double odds_ratio = MiningConfig{}.odds_ratio_threshold;
  std::int64_t min_support = MiningConfig{}.min_support;
  std::int64_t min_buckets = MiningConfig{}.min_buckets;
};

int cmd_mine_rules(const MineArgs& a) {
  const TemplateCorpus corpus = TemplateCorpus::load(a.templates);
  std::optional<Topology> topo;
  if (!a.topology.empty()) topo.emplace(load_topology(a.topology));
  const SyslogInput in = read_syslog(a.syslog, corpus, a.year);
  TemplateTimeseries ts(static_cast<std::int64_t>(a.bucket_s * 1e6));
  for (const auto& m : in.messages) ts.add(m);
  MiningConfig cfg;
  cfg.corr_threshold = a.corr;
  cfg.odds_ratio_threshold = a.odds_ratio;
  cfg.min_support = a.min_support;
  cfg.min_buckets = a.min_buckets;
  MiningStats st;
  const auto rules = mine_causal_rules(ts, topo ? &*topo : nullptr, cfg, &st);
  Output out(a.out);
  for (const auto& r : rules) out.os() << to_jsonl(r) << "\n";
  std::cerr << "lines " << in.lines << " malformed " << in.malformed << " unmatched " << in.unmatched
            << " candidates " << st.candidate_pairs << " correlated " << st.correlated_pairs << " rules "
            << rules.size() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct NetdiagArgs {
  std::vector<std::string> syslog;
  std::string templates;
  std::string rules;
  std::string topology;
  std::string out = "-";
  std::string format = "jsonl";
  double window_s = 60;
  double overlap_s = 10;
  int max_singleton_severity = 2;
  int year = 1970;
};

int cmd_netdiag(const NetdiagArgs& a) {
  check_format(a.format);
  const TemplateCorpus corpus = TemplateCorpus::load(a.templates);
  const Topology topo(load_topology(a.topology));
  const auto rules = a.rules.empty() ? std::vector<CausalRule>{} : load_causal_rules(a.rules);
  const SyslogInput in = read_syslog(a.syslog, corpus, a.year);
  ProblemGraphConfig cfg;
  cfg.window_us = static_cast<std::int64_t>(a.window_s * 1e6);
  cfg.overlap_us = static_cast<std::int64_t>(a.overlap_s * 1e6);
  cfg.max_singleton_severity = a.max_singleton_severity;
  ProblemGraphStats st;
  const auto graphs = mine_problem_graphs(in.messages, rules, &topo, cfg, &st);
  Output out(a.out);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (a.format == "jsonl") {
      out.os() << to_jsonl(graphs[i]) << "\n";
    } else {
      const auto s = summarize(graphs[i], i, &topo);
      out.os() << i << "  " << s.tier << "  root " << s.root_device << "/" << s.root_template << "  nodes "
               << s.node_count << "  devices " << s.devices.size() << "\n";
    }
  }
  std::cerr << "windows " << st.windows << " graphs " << graphs.size() << " dropped_cycle_edges "
            << st.dropped_cycle_edges << " malformed " << in.malformed << " unmatched " << in.unmatched << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct GraphArgs {
  std::string session;
  std::string store = "store";
  bool dot = false;
  std::string out = "-";
};

int cmd_graph(const GraphArgs& a) {
  if (!fs::exists(a.store)) throw NotFoundError("no store at " + a.store);
  const SessionId id = SessionId::from_hex(a.session);
  const auto store = SessionStore::load(a.store, {});
  ExecutionGraph g = build_execution_graph(store->assemble_session(id).trace);
  infer_all(g);
  Output out(a.out);
  if (a.dot) {
    out.os() << to_dot(g);
    return kOk;
  }
  for (const auto& l : g.links) {
    const auto& f = g.edges[l.from];
    const auto& t = g.edges[l.to];
    out.os() << Json{{"type", "link"},
                     {"kind", to_string(l.kind)},
                     {"from", {{"node", f.node}, {"rpc_id", rpc_hex(f.rpc_id)}, {"direction", to_string(f.direction)}}},
                     {"to", {{"node", t.node}, {"rpc_id", rpc_hex(t.rpc_id)}, {"direction", to_string(t.direction)}}}}
                    .dump()
             << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct DiagnoseArgs {
  std::string store = "store";
  std::string rules;
  std::string topology;
  std::string graphs;
  std::string baselines;
  bool save_baselines = false;
  std::string out = "-";
  std::string format = "jsonl";
  int jobs = 1;
  std::size_t top_k = 5;
  double iqr_k = 1.5;
  std::size_t min_samples = 20;
  double content_threshold = 0.25;
  double rpc_threshold = 0.05;
  double queue_window_s = 60;
  std::int64_t now_ms = -1;
  std::int64_t delta_ms = 5000;
  std::int64_t bias_window_ms = 60000;
  double bias_tolerance = 0.1;
};

int cmd_diagnose(const DiagnoseArgs& a) {
  check_format(a.format);
  if (!fs::exists(a.store)) throw NotFoundError("no store at " + a.store);
  std::optional<BoundRuleSet> rules;
  if (!a.rules.empty()) rules.emplace(load_rules(a.rules), builtin_procedures());

  PipelineConfig cfg;
  cfg.detect.k = a.iqr_k;
  cfg.detect.min_samples = a.min_samples;
  cfg.detect.content_threshold = a.content_threshold;
  cfg.rpc_threshold = a.rpc_threshold;
  cfg.queue_window_us = static_cast<std::int64_t>(a.queue_window_s * 1e6);
  cfg.jobs = a.jobs;
  cfg.top_k = a.top_k;
  cfg.validate();

  auto store = SessionStore::load(a.store, ingest_config(a.delta_ms, a.bias_window_ms, a.bias_tolerance));
  BaselineStore baselines(cfg.detect);
  if (!a.baselines.empty() && fs::exists(a.baselines)) baselines.load(a.baselines);

  std::optional<Topology> topo;
  NetworkInputs net;
  if (!a.topology.empty()) {
    topo.emplace(load_topology(a.topology));
    net.topology = &*topo;
  }
  if (!a.graphs.empty()) {
    std::size_t id = 0;
    for (const auto& line : read_lines(a.graphs)) {
      if (line.empty()) continue;
      net.problems.push_back(summarize(from_jsonl<ProblemGraph>(line), id++, net.topology));
    }
  }

  const std::int64_t now = a.now_ms >= 0 ? a.now_ms : store->max_arrival_ms() + store->config().delta_ms;
  DiagnoseStats st;
  const auto reports = diagnose_sessions(*store, baselines, net, rules ? &*rules : nullptr, cfg, now, &st);
  if (a.save_baselines && !a.baselines.empty()) baselines.save(a.baselines);

  Output out(a.out);
  if (a.format == "jsonl") {
    out.os() << render_jsonl(reports);
  } else {
    out.os() << render_table(reports) << "\n" << render_rollups_table(compute_rollups(reports));
  }
  std::cerr << "ready " << st.ready << " diagnosed " << st.diagnosed << " deferred " << st.deferred << " failed "
            << st.failed << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string in;
  std::string out = "-";
  std::string format = "jsonl";
  std::string group_by;
  std::optional<std::int64_t> from_us;
  std::optional<std::int64_t> to_us;
  std::string service;
  std::string verdict;
};

int cmd_report(const ReportArgs& a) {
  check_format(a.format);
  ReportQuery q;
  q.from_us = a.from_us;
  q.to_us = a.to_us;
  if (!a.service.empty()) q.service = a.service;
  if (!a.verdict.empty()) q.verdict = a.verdict;
  const auto reports = filter_reports(load_reports(a.in), q);
  const Rollups r = compute_rollups(reports);
  Output out(a.out);
  if (a.group_by.empty()) {
    if (a.format == "jsonl") {
      out.os() << render_jsonl(reports);
    } else {
      out.os() << render_table(reports) << "\n" << render_rollups_table(r);
    }
    return kOk;
  }
  static const std::map<std::string, std::string> kGroups = {{"service", "services"},
                                                            {"tier", "tiers"},
                                                            {"bottleneck", "bottlenecks"},
                                                            {"pathology", "pathologies"},
                                                            {"verdict", "verdicts"}};
  auto it = kGroups.find(a.group_by);
  if (it == kGroups.end()) throw UsageError("--group-by must be service, tier, bottleneck, pathology or verdict");
  const Json j = rollups_to_json(r);
  if (a.format == "jsonl") {
    out.os() << Json{{"type", "rollup"}, {"group_by", a.group_by}, {"sessions", r.sessions},
                     {"groups", j.at(it->second)}}
                    .dump()
             << "\n";
  } else {
    for (const auto& [k, v] : j.at(it->second).items()) out.os() << k << "  " << v.dump() << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tracekit: session diagnosis from traces, syslogs and transport statistics"};
  app.set_config("--config", "", "TOML/INI file with default option values");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "Generate a scenario bundle with ground truth");
  Options o_sim(s_sim);
  o_sim.add("scenario", sim.scenario, "Scenario JSON file");
  o_sim.add("preset", sim.preset, "Built-in scenario: serving, slow, cdn, syslog");
  o_sim.add("out", sim.out, "Output directory");
  o_sim.add("seed", sim.seed, "Override the scenario seed (-1 keeps it)");

  IngestArgs ing;
  auto* s_ing = app.add_subcommand("ingest", "Ingest JSONL trace records into a session store");
  Options o_ing(s_ing);
  s_ing->add_option("inputs", ing.inputs, "JSONL files or bundle directories")->required();
  o_ing.add("store", ing.store, "Store directory");
  s_ing->add_option("--store-dir", ing.store, "Same as --store");
  o_ing.add("delta-ms", ing.delta_ms, "Quiet period before a session is analysed");
  o_ing.add("bias-window-ms", ing.bias_window_ms, "Volume-bias window width");
  o_ing.add("bias-tolerance", ing.bias_tolerance, "Tolerated volume deficit fraction");
  o_ing.add("arrival-ms", ing.arrival_ms, "Arrival time for lines without arrival_ms");

  MineArgs mine;
  auto* s_mine = app.add_subcommand("mine-rules", "Mine causal rules between syslog templates");
  Options o_mine(s_mine);
  s_mine->add_option("syslog", mine.syslog, "Syslog files")->required();
  o_mine.add("templates", mine.templates, "Template corpus (JSONL)")->required();
  o_mine.add("topology", mine.topology, "Topology snapshot; enables inter-device rules");
  o_mine.add("out", mine.out, "Rules output (JSONL, - for stdout)");
  o_mine.add("bucket-s", mine.bucket_s, "Mining bucket width in seconds");
  o_mine.add("year", mine.year, "Year for RFC3164 timestamps");
  o_mine.add("corr", mine.corr, "Correlation threshold");
  o_mine.add("odds-ratio", mine.odds_ratio, "Odds-ratio threshold");
  o_mine.add("min-support", mine.min_support, "Minimum treated-and-followed count");
  o_mine.add("min-buckets", mine.min_buckets, "Minimum history length in buckets");

  NetdiagArgs gr;
  auto* s_net = app.add_subcommand("netdiag", "Build windowed network problem graphs");
  Options o_graph(s_net);
  s_net->add_option("syslog", gr.syslog, "Syslog files")->required();
  o_graph.add("templates", gr.templates, "Template corpus (JSONL)")->required();
  o_graph.add("topology", gr.topology, "Topology snapshot")->required();
  o_graph.add("rules", gr.rules, "Causal rules (JSONL)");
  o_graph.add("out", gr.out, "Output (- for stdout)");
  o_graph.add("format", gr.format, "jsonl or table");
  o_graph.add("window-s", gr.window_s, "Window width in seconds");
  o_graph.add("overlap-s", gr.overlap_s, "Window overlap in seconds");
  o_graph.add("max-singleton-severity", gr.max_singleton_severity, "Keep singletons at or below this severity");
  o_graph.add("year", gr.year, "Year for RFC3164 timestamps");

  GraphArgs eg;
  auto* s_graph = app.add_subcommand("graph", "Show the execution graph of one session");
  Options o_eg(s_graph);
  s_graph->add_option("session_id", eg.session, "Session id (32 hex digits)")->required();
  o_eg.add("store", eg.store, "Store directory");
  s_graph->add_option("--store-dir", eg.store, "Same as --store");
  o_eg.add("dot", eg.dot, "Emit DOT text with link kinds as edge labels (default: JSONL links)");
  o_eg.add("out", eg.out, "Output (- for stdout)");

  DiagnoseArgs dg;
  auto* s_diag = app.add_subcommand("diagnose", "Diagnose ready sessions in a store");
  Options o_diag(s_diag);
  o_diag.add("store", dg.store, "Store directory");
  s_diag->add_option("--store-dir", dg.store, "Same as --store");
  o_diag.add("rules", dg.rules, "Root-cause rule file");
  o_diag.add("topology", dg.topology, "Topology snapshot");
  o_diag.add("graphs", dg.graphs, "Problem graphs (JSONL from `netdiag`)");
  o_diag.add("baselines", dg.baselines, "Baseline store (JSONL) to start from");
  o_diag.add("save-baselines", dg.save_baselines, "Write updated baselines back");
  o_diag.add("out", dg.out, "Report output (- for stdout)");
  o_diag.add("format", dg.format, "jsonl or table");
  o_diag.add("jobs", dg.jobs, "Worker threads");
  o_diag.add("top-k", dg.top_k, "Contributors kept per report");
  o_diag.add("iqr-k", dg.iqr_k, "IQR fence multiplier");
  o_diag.add("min-samples", dg.min_samples, "Baseline samples required for a verdict");
  o_diag.add("content-threshold", dg.content_threshold, "Significant fraction of onload");
  o_diag.add("rpc-threshold", dg.rpc_threshold, "Queueing delay fraction of e2e that flags an rpc");
  o_diag.add("queue-window-s", dg.queue_window_s, "Delay history window in seconds");
  o_diag.add("now-ms", dg.now_ms, "Analysis time (-1: after the last arrival)");
  o_diag.add("delta-ms", dg.delta_ms, "Quiet period before a session is analysed");
  o_diag.add("bias-window-ms", dg.bias_window_ms, "Volume-bias window width");
  o_diag.add("bias-tolerance", dg.bias_tolerance, "Tolerated volume deficit fraction");

  ReportArgs rp;
  auto* s_rep = app.add_subcommand("report", "Filter and aggregate diagnosis reports");
  Options o_rep(s_rep);
  o_rep.add("in", rp.in, "Reports (JSONL from diagnose)")->required();
  o_rep.add("out", rp.out, "Output (- for stdout)");
  o_rep.add("format", rp.format, "jsonl or table");
  o_rep.add("group-by", rp.group_by, "service, tier, bottleneck, pathology or verdict");
  s_rep->add_option("--from-us", rp.from_us, "Sessions starting at or after");
  s_rep->add_option("--to-us", rp.to_us, "Sessions starting before");
  o_rep.add("service", rp.service, "Only sessions with a contribution from this service");
  o_rep.add("verdict", rp.verdict, "Only sessions with this verdict");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every parse error is a fatal usage error.
    const int code = app.exit(e);
    return code == 0 ? kOk : kFatal;
  }

  try {
    if (*s_sim) return o_sim.apply_env(), cmd_simulate(sim);
    if (*s_ing) return o_ing.apply_env(), cmd_ingest(ing);
    if (*s_mine) return o_mine.apply_env(), cmd_mine_rules(mine);
    if (*s_net) return o_graph.apply_env(), cmd_netdiag(gr);
    if (*s_graph) return o_eg.apply_env(), cmd_graph(eg);
    if (*s_diag) return o_diag.apply_env(), cmd_diagnose(dg);
    if (*s_rep) return o_rep.apply_env(), cmd_report(rp);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFatal;
  }
  return kFatal;
}
