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

#include <map>

#include "helpers.h"
#include "oracles.h"
#include "tracekit/critpath.h"
#include "tracekit/errors.h"
#include "tracekit/ingest.h"
#include "tracekit/sim.h"

using namespace tracekit;
using testing_helpers::edge;
using testing_helpers::sid;

namespace {

CriticalPath path_of(const SessionTrace& t) {
  ExecutionGraph g = build_execution_graph(t);
  infer_all(g);
  return critical_path(g);
}

std::map<std::string, std::int64_t> compute_by_service(const CriticalPath& p) {
  std::map<std::string, std::int64_t> out;
  for (const auto& s : p.segments) {
    if (s.kind == SegmentKind::kCompute) out[service_of(s.node)] += s.duration_us;
  }
  return out;
}

}  // namespace

TEST_CASE("service latency") {
  const auto e0 = edge(1, 0, "a", Direction::kRequestIn, 90, 100);
  CHECK(service_latency(e0, edge(2, 1, "a", Direction::kRequestOut, 130, 130)) == 30);
  CHECK(service_latency(e0, edge(2, 1, "a", Direction::kRequestOut, 100, 100)) == 0);
  CHECK_THROWS_AS(service_latency(e0, edge(2, 1, "a", Direction::kRequestOut, 90, 90)), ClockAnomalyError);
  CHECK_THROWS_AS(service_latency(e0, edge(2, 1, "b", Direction::kRequestOut, 130, 130)), ClockMismatchError);
}

TEST_CASE("network latency of one edge") {
  CHECK(network_latency(edge(1, 0, "a", Direction::kRequestIn, 10, 25)) == 15);
  CHECK(network_latency(edge(1, 0, "a", Direction::kRequestIn, 10, 10)) == 0);
}

TEST_CASE("serialized calls: both rpcs on the path") {
  // A computes 10, calls B (30), computes 5, calls C (40), computes 5.
  SessionTrace t;
  t.session_id = sid(1);
  testing_helpers::root(t, 0x10, "A@h1", 0, 90);
  testing_helpers::rpc(t, 0x11, 0x10, "A@h1", "B@h2", 10, 10, 40, 40);
  testing_helpers::rpc(t, 0x12, 0x10, "A@h1", "C@h3", 45, 45, 85, 85);
  const CriticalPath p = path_of(t);
  CHECK(p.total_latency_us == 90);
  CHECK_FALSE(p.partial);
  CHECK(compute_by_service(p) == std::map<std::string, std::int64_t>{{"A", 20}, {"B", 30}, {"C", 40}});

  const auto c = service_contributions(p, 90);
  REQUIRE(c.size() == 3);
  CHECK(c[0].service == "C");
  CHECK(c[0].fraction == doctest::Approx(40.0 / 90));
  CHECK(c[1].service == "B");
  CHECK(c[1].fraction == doctest::Approx(30.0 / 90));
  CHECK(c[2].service == "A");
  CHECK(c[2].latency_us == 20);

  ExecutionGraph g = build_execution_graph(t);
  infer_all(g);
  const auto want = oracle::longest_walk(g);
  REQUIRE(want);
  CHECK(want->total == p.total_latency_us);
  CHECK(want->segments == p.segments);
}

TEST_CASE("parallel calls: only the slower branch") {
  // A computes 10, calls B (30) and C (40) in parallel, computes 5.
  SessionTrace t;
  t.session_id = sid(1);
  testing_helpers::root(t, 0x10, "A@h1", 0, 55);
  testing_helpers::rpc(t, 0x11, 0x10, "A@h1", "B@h2", 10, 10, 40, 40);
  testing_helpers::rpc(t, 0x12, 0x10, "A@h1", "C@h3", 10, 10, 50, 50);
  const CriticalPath p = path_of(t);
  CHECK(p.total_latency_us == 55);
  const auto by = compute_by_service(p);
  CHECK(by.count("B") == 0);
  CHECK(by.at("C") == 40);
  CHECK(by.at("A") == 15);

  ExecutionGraph g = build_execution_graph(t);
  infer_all(g);
  const auto want = oracle::longest_walk(g);
  REQUIRE(want);
  CHECK(want->total == 55);
  CHECK(want->segments == p.segments);
}

TEST_CASE("single-rpc session: the root round trip") {
  SessionTrace t;
  t.session_id = sid(1);
  testing_helpers::root(t, 0x10, "A@h1", 100, 350);
  const CriticalPath p = path_of(t);
  CHECK(p.total_latency_us == 250);
  REQUIRE(p.segments.size() == 1);
  CHECK(p.segments[0].node == "A@h1");
}

TEST_CASE("network segment is round trip minus callee residence") {
  // Caller and callee clocks differ by 1e6; only single-clock differences
  // are used.
  SessionTrace t;
  t.session_id = sid(1);
  testing_helpers::root(t, 0x10, "A@h1", 0, 100);
  testing_helpers::rpc(t, 0x11, 0x10, "A@h1", "B@h2", 10, 1'000'015, 1'000'065, 80);
  const CriticalPath p = path_of(t);
  CHECK(p.total_latency_us == 100);
  std::int64_t net = 0;
  for (const auto& s : p.segments) {
    if (s.kind == SegmentKind::kNetwork) net += s.duration_us;
  }
  CHECK(net == 70 - 50);
}

TEST_CASE("missing callee side falls back to the caller round trip") {
  SessionTrace t;
  t.session_id = sid(1);
  testing_helpers::root(t, 0x10, "A@h1", 0, 100);
  testing_helpers::rpc(t, 0x11, 0x10, "A@h1", "B@h2", 10, 15, 65, 80);
  t.edges.erase(t.edges.begin() + 3, t.edges.begin() + 5);  // B's request_in and response_out
  const CriticalPath p = path_of(t);
  CHECK(p.partial);
  CHECK(p.total_latency_us == 100);
}

TEST_CASE("clean simulated sessions: path total equals the root round trip") {
  ServingScenario sc;
  sc.seed = 91;
  sc.sessions = 300;
  sc.random_blueprints = true;
  sc.clock_offset_max_us = 100000;
  const SessionBundle b = generate_sessions(sc);
  SessionStore store;
  for (const auto& r : b.records) store.ingest(r.record, r.arrival_ms);
  for (const auto& truth : b.truth) {
    const SessionTrace t = store.assemble_session(truth.session_id).trace;
    const CriticalPath p = path_of(t);
    CHECK(p.total_latency_us == end_to_end_latency(t).latency_us);
    CHECK(p.total_latency_us == truth.e2e_us);
  }
}

TEST_CASE("contributions") {
  CriticalPath p;
  p.segments = {{SegmentKind::kCompute, "x@h", 1, 50}, {SegmentKind::kNetwork, "x@h->y@h", 2, 50}};
  const auto c = service_contributions(p, 100);
  REQUIRE(c.size() == 1);
  CHECK(c[0].fraction == doctest::Approx(0.5));
  CHECK_THROWS_AS(service_contributions(p, 0), ValidationError);
}

TEST_CASE("end-to-end latency prefers navtiming") {
  SessionTrace t;
  t.session_id = sid(1);
  testing_helpers::root(t, 0x10, "A@h1", 0, 4000);
  CHECK(end_to_end_latency(t).latency_us == 4000);
  CHECK(end_to_end_latency(t).source == "root_round_trip");
  t.navtiming = NavTimingRecord{sid(1), {}, 12.5};
  CHECK(end_to_end_latency(t).latency_us == 12500);
  CHECK(end_to_end_latency(t).source == "navtiming");
  CHECK(end_to_end_latency(SessionTrace{}).latency_us == 0);
}
