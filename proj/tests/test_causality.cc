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
#include <set>

#include "helpers.h"
#include "tracekit/causality.h"
#include "tracekit/ingest.h"
#include "tracekit/sim.h"

using namespace tracekit;
using testing_helpers::sid;

namespace {

std::set<std::pair<RpcId, RpcId>> rpc_links(const ExecutionGraph& g, LinkKind k) {
  std::set<std::pair<RpcId, RpcId>> out;
  for (const auto& l : g.links_of(k)) out.insert({g.edges[l.from].rpc_id, g.edges[l.to].rpc_id});
  return out;
}

// fe serves the root and calls a then b; the caller-side first bytes of b's
// request and a's response are the knobs.
SessionTrace two_children(std::int64_t a_resp_in, std::int64_t b_req_out, std::int64_t reply_first,
                          std::int64_t reply_last) {
  SessionTrace t;
  t.session_id = sid(1);
  testing_helpers::root(t, 0x10, "fe@h", 0, reply_first);
  t.edges[1].last_byte.micros = reply_last;
  testing_helpers::rpc(t, 0x11, 0x10, "fe@h", "a@h2", 10, 12, 20, a_resp_in);
  testing_helpers::rpc(t, 0x12, 0x10, "fe@h", "b@h3", b_req_out, b_req_out + 2, b_req_out + 8, b_req_out + 10);
  return t;
}

}  // namespace

TEST_CASE("linear session: two rpcs and one parent-child link") {
  SessionTrace t;
  t.session_id = sid(1);
  testing_helpers::root(t, 0x10, "a@h1", 0, 100);
  testing_helpers::rpc(t, 0x11, 0x10, "a@h1", "b@h2", 10, 20, 60, 70);
  const ExecutionGraph g = build_execution_graph(t);
  CHECK(g.rpcs.size() == 2);
  CHECK(g.links_of(LinkKind::kParentChild).size() == 1);
  CHECK(g.gaps.empty());
  CHECK(g.find(0x11)->caller == "a@h1");
  CHECK(g.find(0x11)->callee == "b@h2");
}

TEST_CASE("fanout gives sibling rpcs sharing a parent") {
  const ExecutionGraph g = build_execution_graph(two_children(100, 50, 200, 200));
  const auto kids = g.children(0x10, "fe@h");
  REQUIRE(kids.size() == 2);
  CHECK(kids[0]->rpc_id == 0x11);
  CHECK(kids[1]->rpc_id == 0x12);
}

TEST_CASE("sibling serialization predicate") {
  SUBCASE("response first byte before the next request") {
    ExecutionGraph g = build_execution_graph(two_children(100, 120, 300, 300));
    infer_sibling_causality(g, "fe@h");
    CHECK(rpc_links(g, LinkKind::kSiblingSerialization) == std::set<std::pair<RpcId, RpcId>>{{0x11, 0x12}});
  }
  SUBCASE("response after the next request") {
    ExecutionGraph g = build_execution_graph(two_children(100, 90, 300, 300));
    infer_sibling_causality(g, "fe@h");
    CHECK(rpc_links(g, LinkKind::kSiblingSerialization).empty());
  }
  SUBCASE("ties are not causal") {
    ExecutionGraph g = build_execution_graph(two_children(100, 100, 300, 300));
    infer_sibling_causality(g, "fe@h");
    CHECK(rpc_links(g, LinkKind::kSiblingSerialization).empty());
  }
}

TEST_CASE("redundancy predicate") {
  // a's response at 40, b's at 60, reply last byte 50.
  SessionTrace t;
  t.session_id = sid(1);
  testing_helpers::root(t, 0x10, "fe@h", 0, 45);
  t.edges[1].last_byte.micros = 50;
  testing_helpers::rpc(t, 0x11, 0x10, "fe@h", "a@h2", 5, 6, 30, 40);
  testing_helpers::rpc(t, 0x12, 0x10, "fe@h", "b@h3", 5, 6, 55, 60);
  ExecutionGraph g = build_execution_graph(t);
  infer_all(g);
  std::set<RpcId> linked;
  for (const auto& l : g.links_of(LinkKind::kRedundancyContribution)) linked.insert(g.edges[l.from].rpc_id);
  CHECK(linked == std::set<RpcId>{0x11});
  REQUIRE(g.non_causal.size() == 1);
  CHECK(g.edges[*g.non_causal.begin()].rpc_id == 0x12);

  SUBCASE("all responses before the reply are linked") {
    t.edges[1].last_byte.micros = 100;
    ExecutionGraph g2 = build_execution_graph(t);
    infer_all(g2);
    CHECK(g2.links_of(LinkKind::kRedundancyContribution).size() == 2);
    CHECK(g2.non_causal.empty());
  }
}

TEST_CASE("first k of n: exactly the winners contribute") {
  ServingScenario sc;
  sc.seed = 77;
  sc.sessions = 50;
  CallSpec leaf{"kv", {2.0, 0.6}, "serial", 1, 100, 500, {}};
  sc.blueprint = {"fe", {1.0, 0.2}, "redundant", 2, 400, 4000, {leaf, leaf, leaf, leaf}};
  const SessionBundle b = generate_sessions(sc);
  SessionStore store;
  for (const auto& r : b.records) store.ingest(r.record, r.arrival_ms);
  for (const auto& truth : b.truth) {
    ExecutionGraph g = build_execution_graph(store.assemble_session(truth.session_id).trace);
    infer_all(g);
    std::set<RpcId> linked, late;
    for (const auto& l : g.links_of(LinkKind::kRedundancyContribution)) linked.insert(g.edges[l.from].rpc_id);
    for (auto i : g.non_causal) late.insert(g.edges[i].rpc_id);
    CHECK(linked.size() == 2);
    CHECK(late.size() == 2);
    CHECK(linked == truth.contributors);
    CHECK(late == truth.late);
  }
}

TEST_CASE("graph shape equals the generated call tree") {
  ServingScenario sc;
  sc.seed = 78;
  sc.sessions = 500;
  sc.random_blueprints = true;
  sc.clock_offset_max_us = 5000;
  const SessionBundle b = generate_sessions(sc);
  SessionStore store;
  for (const auto& r : b.records) store.ingest(r.record, r.arrival_ms);
  for (const auto& truth : b.truth) {
    ExecutionGraph g = build_execution_graph(store.assemble_session(truth.session_id).trace);
    std::map<RpcId, std::tuple<RpcId, std::string, std::string>> want, got;
    for (const auto& r : truth.rpcs) want[r.rpc_id] = {r.parent_rpc_id, r.caller, r.callee};
    for (const auto& r : g.rpcs) got[r.rpc_id] = {r.parent_rpc_id, r.caller, r.callee};
    CHECK(got == want);
    infer_all(g);
    CHECK(is_acyclic(g, {LinkKind::kParentChild, LinkKind::kRequestResponse, LinkKind::kSiblingSerialization,
                         LinkKind::kRedundancyContribution, LinkKind::kMessageTransit}));
  }
}

TEST_CASE("missing parent leaves a gap") {
  SessionTrace t;
  t.session_id = sid(1);
  testing_helpers::rpc(t, 0x11, 0x10, "fe@h", "a@h2", 10, 12, 20, 22);
  const ExecutionGraph g = build_execution_graph(t);
  CHECK_FALSE(g.gaps.empty());
}

TEST_CASE("dot output names link kinds") {
  ExecutionGraph g = build_execution_graph(two_children(100, 120, 300, 300));
  infer_all(g);
  const std::string dot = to_dot(g);
  CHECK(dot.rfind("digraph", 0) == 0);
  CHECK(dot.find(std::string(to_string(LinkKind::kSiblingSerialization))) != std::string::npos);
}
