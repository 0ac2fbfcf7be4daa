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

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tracekit/errors.h"
#include "tracekit/pipeline.h"
#include "tracekit/sim.h"

using namespace tracekit;

namespace {

ServingScenario two_leaf(std::uint64_t seed, int sessions) {
  ServingScenario sc;
  sc.seed = seed;
  sc.sessions = sessions;
  sc.blueprint = {"fe", {1, 0.2}, "parallel", 1, 400, 4000, {{"a", {1, 0.2}, "serial", 1, 400, 4000, {}}, {"b", {1, 0.2}, "serial", 1, 400, 4000, {}}}};
  return sc;
}

std::unique_ptr<SessionStore> store_of(const SessionBundle& b) {
  auto s = std::make_unique<SessionStore>();
  for (const auto& r : b.records) s->ingest(r.record, r.arrival_ms);
  return s;
}

std::vector<DiagnosisReport> run(const SessionBundle& b, int jobs, DiagnoseStats* st = nullptr) {
  auto store = store_of(b);
  BaselineStore baselines;
  PipelineConfig cfg;
  cfg.jobs = jobs;
  return diagnose_sessions(*store, baselines, {}, nullptr, cfg, store->max_arrival_ms() + 1'000'000, st);
}

}  // namespace

TEST_CASE("reports do not depend on the worker count") {
  ServingScenario sc = two_leaf(5, 400);
  sc.slow = SlowService{"b", 30.0, 0.1};
  const SessionBundle b = generate_sessions(sc);
  const auto one = run(b, 1);
  const auto four = run(b, 4);
  REQUIRE(one.size() == 400);
  CHECK(one == four);
  CHECK(render_jsonl(one) == render_jsonl(four));
}

TEST_CASE("contributor lists are cut to top-k") {
  const SessionBundle b = generate_sessions(two_leaf(7, 30));
  auto store = store_of(b);
  BaselineStore baselines;
  PipelineConfig cfg;
  cfg.top_k = 1;
  const auto cut = diagnose_sessions(*store, baselines, {}, nullptr, cfg, store->max_arrival_ms() + 1'000'000);
  const auto full = run(b, 1);
  REQUIRE(cut.size() == full.size());
  for (std::size_t i = 0; i < cut.size(); ++i) {
    REQUIRE(cut[i].contributions.size() == 1);
    CHECK(cut[i].contributions[0] == full[i].contributions[0]);
  }
}

TEST_CASE("reanalysis happens only after a change") {
  const SessionBundle b = generate_sessions(two_leaf(6, 20));
  auto store = store_of(b);
  BaselineStore baselines;
  const std::int64_t now = store->max_arrival_ms() + 1'000'000;
  DiagnoseStats st;
  CHECK(diagnose_sessions(*store, baselines, {}, nullptr, {}, now, &st).size() == 20);
  CHECK(st.diagnosed == 20);
  CHECK(diagnose_sessions(*store, baselines, {}, nullptr, {}, now).empty());
}

TEST_CASE("sessions in a volume-biased window are deferred") {
  ServingScenario sc = two_leaf(31, 3000);
  sc.volume_drop = VolumeDrop{"a", 180000, 240000, 0.7};
  const SessionBundle b = generate_sessions(sc);
  DiagnoseStats st;
  const auto reports = run(b, 1, &st);
  std::size_t deferred = 0;
  for (const auto& r : reports) {
    if (!r.deferred) continue;
    ++deferred;
    CHECK(r.defer_reason.find("volume bias") != std::string::npos);
    CHECK(r.critical_path.segments.empty());
  }
  CHECK(deferred > 0);
  CHECK(deferred == st.deferred);
  CHECK(deferred < reports.size() / 2);
  // Sessions well before the outage are analysed.
  for (const auto& r : reports) {
    if (r.start_us < 120'000'000) CHECK_FALSE(r.deferred);
  }
}

TEST_CASE("rollups, filters and report round-trip") {
  ServingScenario sc = two_leaf(8, 300);
  sc.slow = SlowService{"a", 40.0, 0.2};
  const auto reports = run(generate_sessions(sc), 1);
  const Rollups r = compute_rollups(reports);
  CHECK(r.sessions == reports.size());
  std::size_t verdict_total = 0;
  for (const auto& [v, n] : r.verdicts) verdict_total += n;
  CHECK(verdict_total == reports.size());
  std::size_t with_a = 0;
  for (const auto& rep : reports) {
    for (const auto& c : rep.contributions) with_a += c.service == "a";
  }
  CHECK(r.services.at("a").sessions == with_a);

  ReportQuery q;
  q.verdict = "high";
  const auto high = filter_reports(reports, q);
  CHECK(high.size() == (r.verdicts.count("high") ? r.verdicts.at("high") : 0));
  for (const auto& rep : high) CHECK(rep.detection.verdict == Verdict::kHigh);
  q = {};
  q.from_us = reports[10].start_us;
  q.to_us = reports[10].start_us + 1;
  const auto one = filter_reports(reports, q);
  REQUIRE_FALSE(one.empty());
  for (const auto& rep : one) CHECK(rep.start_us == reports[10].start_us);

  const auto path = std::filesystem::temp_directory_path() / "tracekit_reports.jsonl";
  {
    std::ofstream out(path);
    out << render_jsonl(reports);
  }
  CHECK(load_reports(path.string()) == reports);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_reports("/nonexistent/reports.jsonl"), NotFoundError);
  CHECK(render_table(reports).find("session") != std::string::npos);
}

TEST_CASE("slow leaf dominates the contributions of affected sessions") {
  ServingScenario sc = two_leaf(9, 400);
  sc.slow = SlowService{"b", 50.0, 0.1};
  const SessionBundle b = generate_sessions(sc);
  const auto reports = run(b, 1);
  std::map<SessionId, const SessionTruth*> truth;
  for (const auto& t : b.truth) truth[t.session_id] = &t;
  std::size_t slow = 0;
  for (const auto& rep : reports) {
    if (!truth.at(rep.session_id)->slow_injected) continue;
    ++slow;
    const Contribution* top = nullptr;
    for (const auto& c : rep.contributions) {
      if (!top || c.latency_us > top->latency_us) top = &c;
    }
    REQUIRE(top);
    CHECK(top->service == "b");
  }
  CHECK(slow > 10);
}

TEST_CASE("pipeline config validation") {
  PipelineConfig c;
  c.jobs = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.top_k = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.rpc_threshold = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}
