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

#include <algorithm>

#include <doctest.h>

#include "helpers.h"
#include "tracekit/codec.h"
#include "tracekit/errors.h"
#include "tracekit/model.h"

using namespace tracekit;
using testing_helpers::edge;
using testing_helpers::sid;

TEST_CASE("elapsed_us requires a single clock") {
  CHECK(elapsed_us({10, "a"}, {25, "a"}) == 15);
  CHECK_THROWS_AS(elapsed_us({10, "a"}, {25, "b"}), ClockMismatchError);
}

TEST_CASE("session id hex round-trip") {
  const SessionId s{0x0123456789abcdefULL, 0xfedcba9876543210ULL};
  CHECK(s.hex() == "0123456789abcdeffedcba9876543210");
  CHECK(SessionId::from_hex(s.hex()) == s);
  CHECK_THROWS_AS(SessionId::from_hex("0123"), DecodeError);
  CHECK_THROWS_AS(SessionId::from_hex("zz23456789abcdeffedcba9876543210"), DecodeError);
}

TEST_CASE("node naming") {
  CHECK(service_of("search@h1.dc2") == "search");
  CHECK(host_of("search@h1.dc2") == "h1.dc2");
  CHECK(datacenter_of("h1.dc2") == "dc2");
  CHECK(service_of("plain") == "plain");
  CHECK(host_of("plain") == "plain");
}

TEST_CASE("enum string forms round-trip") {
  for (auto d : {Direction::kRequestOut, Direction::kRequestIn, Direction::kResponseOut, Direction::kResponseIn}) {
    CHECK(direction_from_string(to_string(d)) == d);
  }
  for (auto v : {Verdict::kNormal, Verdict::kHigh, Verdict::kLow, Verdict::kInsufficientData}) {
    CHECK(verdict_from_string(to_string(v)) == v);
  }
  CHECK_FALSE(direction_from_string("sideways").has_value());
}

TEST_CASE("validate_trace") {
  SessionTrace t;
  t.session_id = sid(1);
  t.edges.push_back(edge(7, kRootParent, "fe@h", Direction::kRequestIn, 10, 12));
  t.edges.push_back(edge(7, kRootParent, "fe@h", Direction::kResponseOut, 50, 55));

  SUBCASE("well-formed two-edge trace") { CHECK(validate_trace(t).empty()); }
  SUBCASE("child referencing an absent parent") {
    t.edges.push_back(edge(9, 8, "fe@h", Direction::kRequestOut, 20, 20));
    const auto v = validate_trace(t);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == "dangling parent");
  }
  SUBCASE("first byte after last byte") {
    t.edges[1].last_byte.micros = 40;
    const auto v = validate_trace(t);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == "timestamp order");
  }
  SUBCASE("violations do not depend on record order") {
    t.edges.push_back(edge(9, 8, "fe@h", Direction::kRequestOut, 20, 20));
    t.edges[0].last_byte.micros = 1;
    auto a = validate_trace(t);
    std::reverse(t.edges.begin(), t.edges.end());
    CHECK(validate_trace(t) == a);
  }
}

TEST_CASE("JSONL codec round-trips every record type") {
  RpcEdgeRecord e = edge(0x1234, 0x12, "svc@h", Direction::kResponseIn, 5, 9);
  e.peer = "other@h2";
  e.payload_bytes = 77;
  CHECK(from_jsonl<RpcEdgeRecord>(to_jsonl(e)) == e);

  AnnotationRecord a{sid(3), 0x99, "svc@h", "lock_wait", "1200us", {44, "svc@h"}};
  CHECK(from_jsonl<AnnotationRecord>(to_jsonl(a)) == a);

  NavTimingRecord n{sid(3), {{"dns", {0, "browser"}, {10, "browser"}}}, 123.5};
  CHECK(from_jsonl<NavTimingRecord>(to_jsonl(n)) == n);

  TcpSnapshot s;
  s.session_id = sid(4);
  s.connection_id = "c1";
  s.at = {100, "cdn@e"};
  s.srtt_us = 80000;
  s.retrans_segments = 2;
  CHECK(from_jsonl<TcpSnapshot>(to_jsonl(s)) == s);

  DiagnosisReport r;
  r.session_id = sid(5);
  r.critical_path.segments.push_back({SegmentKind::kNetwork, "a->b", 3, 40});
  r.internet_findings.push_back({});
  r.symptoms["x"] = "unknown";
  CHECK(from_jsonl<DiagnosisReport>(to_jsonl(r)) == r);

  for (const SessionRecord& rec : {SessionRecord{e}, SessionRecord{a}, SessionRecord{n}, SessionRecord{s}}) {
    CHECK(decode_session_record(encode_session_record(rec)) == rec);
  }
}

TEST_CASE("JSONL decode errors") {
  CHECK_THROWS_AS(decode_session_record("not json"), DecodeError);
  CHECK_THROWS_AS(decode_session_record(R"({"type":"edge","v":1})"), DecodeError);
  CHECK_THROWS_AS(decode_session_record(R"({"type":"mystery","v":1})"), DecodeError);
  const auto line = to_jsonl(edge(1, 0, "a", Direction::kRequestIn, 1, 1));
  CHECK_THROWS_AS(from_jsonl<AnnotationRecord>(line), DecodeError);
}
