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

#include <set>
#include <string>
#include <thread>
#include <vector>

#include "tracekit/errors.h"
#include "tracekit/trace_api.h"

using namespace tracekit;

namespace {

struct Fixture {
  BoundedQueueSink sink{100000};
  ManualClock clock{1000};
  Tracer fe{"fe@h1", sink, clock, 7};
  Tracer be{"be@h2", sink, clock, 8};

  std::vector<RpcEdgeRecord> edges() {
    std::vector<RpcEdgeRecord> out;
    for (auto& e : sink.drain()) {
      if (auto* r = std::get_if<RpcEdgeRecord>(&e.record)) out.push_back(*r);
    }
    return out;
  }
};

}  // namespace

TEST_CASE("header encoding is the documented fixed format") {
  TraceHeader h{{0, 1}, 7, kRootParent};
  CHECK(encode_header(h) == "s:00000000000000000000000000000001;r:0000000000000007;p:0000000000000000");
  CHECK(encode_header(h).size() == kEncodedHeaderSize);
  CHECK(decode_header(encode_header(h)) == h);
}

TEST_CASE("header decode errors carry an offset") {
  CHECK_THROWS_AS(decode_header("s:zz;r:0;p:0"), DecodeError);
  const std::string good = encode_header({{0, 1}, 7, 3});
  CHECK_THROWS_AS(decode_header(good.substr(0, 40)), DecodeError);
  CHECK_THROWS_AS(decode_header(good + "x"), DecodeError);
  CHECK_THROWS_AS(decode_header(encode_header({{0, 1}, 0, 3})), DecodeError);
  try {
    decode_header("s:0000000000000000000000000000000g;r:0000000000000007;p:0000000000000000");
    FAIL("expected DecodeError");
  } catch (const DecodeError& e) {
    CHECK(e.offset() == 33);
  }
}

TEST_CASE("create at the origin starts a new session") {
  Fixture f;
  SessionContext ctx = f.fe.create("");
  CHECK(ctx.header().parent_rpc_id == kRootParent);
  CHECK(ctx.header().rpc_id != 0);
  SessionContext other = f.fe.create("");
  CHECK(other.header().session_id != ctx.header().session_id);
  const auto e = f.edges();
  REQUIRE(e.size() == 2);
  CHECK(e[0].direction == Direction::kRequestIn);
}

TEST_CASE("create passes header ids through") {
  Fixture f;
  const TraceHeader h{{5, 6}, 7, 3};
  SessionContext ctx = f.be.create(encode_header(h));
  CHECK(ctx.header() == h);
  const auto e = f.edges();
  REQUIRE(e.size() == 1);
  CHECK(e[0].rpc_id == 7);
  CHECK(e[0].parent_rpc_id == 3);
  CHECK(e[0].node == "be@h2");
  CHECK_THROWS_AS(f.be.create(encode_header(h).substr(0, 20)), DecodeError);
}

TEST_CASE("sendtonext issues distinct children of the current rpc") {
  Fixture f;
  SessionContext ctx = f.be.create(encode_header({{5, 6}, 7, 3}));
  const TraceHeader c1 = decode_header(f.fe.sendtonext(ctx));
  const TraceHeader c2 = decode_header(f.fe.sendtonext(ctx));
  CHECK(c1.parent_rpc_id == 7);
  CHECK(c2.parent_rpc_id == 7);
  CHECK(c1.rpc_id != c2.rpc_id);
  CHECK(c1.session_id == ctx.header().session_id);
  CHECK(ctx.children_issued() == 2);
}

TEST_CASE("ten sequential calls emit ten request_out events in order") {
  Fixture f;
  SessionContext ctx = f.fe.create("");
  std::vector<RpcId> issued;
  for (int i = 0; i < 10; ++i) issued.push_back(decode_header(f.fe.sendtonext(ctx)).rpc_id);
  std::vector<EmittedEvent> events = f.sink.drain();
  std::vector<RpcId> seen;
  std::uint64_t last_seq = 0;
  for (auto& ev : events) {
    CHECK(ev.seq >= last_seq);
    last_seq = ev.seq;
    auto* r = std::get_if<RpcEdgeRecord>(&ev.record);
    if (r && r->direction == Direction::kRequestOut) seen.push_back(r->rpc_id);
  }
  CHECK(seen == issued);
}

TEST_CASE("recvfromnext correlates responses with issued children") {
  Fixture f;
  SessionContext ctx = f.fe.create("");
  const std::string out = f.fe.sendtonext(ctx);
  SessionContext child = f.be.create(out);
  const std::string reply = f.be.sendtoprev(child);
  f.fe.recvfromnext(ctx, reply);
  const auto e = f.edges();
  REQUIRE(e.size() == 5);
  CHECK(e.back().direction == Direction::kResponseIn);
  CHECK(e.back().rpc_id == decode_header(out).rpc_id);

  SUBCASE("response for a never-issued child") {
    TraceHeader bogus = decode_header(reply);
    bogus.rpc_id ^= 0x8;  // counter the context never issued
    CHECK_THROWS_AS(f.fe.recvfromnext(ctx, encode_header(bogus)), CorrelationError);
  }
  SUBCASE("redundant duplicates both accepted") {
    const std::string out2 = f.fe.sendtonext(ctx);
    SessionContext c2 = f.be.create(out2);
    f.fe.recvfromnext(ctx, f.be.sendtoprev(c2));
    const auto e2 = f.edges();
    REQUIRE(e2.size() == 4);  // request_out, request_in, response_out, response_in
    CHECK(e2.back().direction == Direction::kResponseIn);
    CHECK(e2.back().rpc_id == decode_header(out2).rpc_id);
  }
}

TEST_CASE("sendtoprev mirrors the incoming header") {
  Fixture f;
  const TraceHeader h{{5, 6}, 7, 3};
  SessionContext ctx = f.be.create(encode_header(h));
  CHECK(decode_header(f.be.sendtoprev(ctx)) == h);
  const auto e = f.edges();
  REQUIRE(e.size() == 2);
  CHECK(e[1].direction == Direction::kResponseOut);
  CHECK(e[1].rpc_id == 7);
}

TEST_CASE("annotations") {
  Fixture f;
  SessionContext ctx = f.fe.create("");
  f.sink.drain();
  f.fe.annotate(ctx, "lock_wait", "1200us");
  auto ev = f.sink.drain();
  REQUIRE(ev.size() == 1);
  auto* a = std::get_if<AnnotationRecord>(&ev[0].record);
  REQUIRE(a != nullptr);
  CHECK(a->key == "lock_wait");
  CHECK(a->value == "1200us");
  CHECK_THROWS_AS(f.fe.annotate(ctx, "", "x"), UsageError);

  for (int i = 0; i < 1000; ++i) f.fe.annotate(ctx, "k", std::to_string(i));
  ev = f.sink.drain();
  REQUIRE(ev.size() == 1000);
  for (int i = 0; i < 1000; ++i) CHECK(std::get<AnnotationRecord>(ev[static_cast<std::size_t>(i)].record).value == std::to_string(i));
}

TEST_CASE("close is final") {
  Fixture f;
  SessionContext ctx = f.fe.create("");
  f.fe.close(ctx);
  CHECK_FALSE(ctx.open());
  CHECK_THROWS_AS(f.fe.annotate(ctx, "k", "v"), UsageError);
  CHECK_THROWS_AS(f.fe.close(ctx), UsageError);
  CHECK_THROWS_AS(f.fe.sendtonext(ctx), UsageError);
}

TEST_CASE("edge options stamp explicit byte times") {
  Fixture f;
  EdgeOptions o;
  o.first_byte_us = 100;
  o.last_byte_us = 140;
  o.payload_bytes = 512;
  o.peer = "user";
  SessionContext ctx = f.fe.create("", o);
  const auto e = f.edges();
  REQUIRE(e.size() == 1);
  CHECK(e[0].first_byte.micros == 100);
  CHECK(e[0].last_byte.micros == 140);
  CHECK(e[0].first_byte.clock_id == "fe@h1");
  CHECK(e[0].payload_bytes == 512);
  o.first_byte_us = 200;
  CHECK_THROWS_AS(f.fe.sendtoprev(ctx, o), UsageError);
}

TEST_CASE("bounded queue drops and counts when full") {
  BoundedQueueSink sink(3);
  ManualClock clock;
  Tracer t("a@h", sink, clock, 1);
  SessionContext ctx = t.create("");
  for (int i = 0; i < 5; ++i) t.annotate(ctx, "k", "v");
  CHECK(sink.size() == 3);
  CHECK(sink.dropped() == 3);
}

TEST_CASE("concurrent sessions on one tracer") {
  BoundedQueueSink sink(1 << 20);
  ManualClock clock;
  Tracer t("a@h", sink, clock, 3);
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&] {
      for (int j = 0; j < 500; ++j) {
        SessionContext ctx = t.create("");
        t.sendtonext(ctx);
        t.sendtoprev(ctx);
      }
    });
  }
  for (auto& th : threads) th.join();
  std::set<std::uint64_t> seqs;
  std::set<SessionId> sessions;
  for (auto& e : sink.drain()) {
    seqs.insert(e.seq);
    sessions.insert(std::get<RpcEdgeRecord>(e.record).session_id);
  }
  CHECK(seqs.size() == 6000);
  CHECK(sessions.size() == 2000);
}
