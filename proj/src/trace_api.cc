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

#include "tracekit/trace_api.h"

#include <chrono>
#include <random>

#include "tracekit/errors.h"

namespace tracekit {

namespace {

constexpr char kHex[] = "0123456789abcdef";

void put_hex(std::string& out, std::uint64_t v) {
  for (int shift = 60; shift >= 0; shift -= 4) out.push_back(kHex[(v >> shift) & 0xf]);
}

std::uint64_t read_hex(std::string_view s, std::size_t pos, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = pos; i < pos + width; ++i) {
    char c = s[i];
    int d;
    if (c >= '0' && c <= '9') {
      d = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      d = c - 'a' + 10;
    } else {
      throw DecodeError("non-hex digit in trace header", i);
    }
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

void expect_literal(std::string_view s, std::size_t pos, std::string_view lit) {
  for (std::size_t i = 0; i < lit.size(); ++i) {
    if (pos + i >= s.size()) throw DecodeError("truncated trace header", pos + i);
    if (s[pos + i] != lit[i]) throw DecodeError("unexpected character in trace header", pos + i);
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string encode_header(const TraceHeader& h) {
  std::string out;
  out.reserve(kEncodedHeaderSize);
  out += "s:";
  put_hex(out, h.session_id.hi);
  put_hex(out, h.session_id.lo);
  out += ";r:";
  put_hex(out, h.rpc_id);
  out += ";p:";
  put_hex(out, h.parent_rpc_id);
  return out;
}

TraceHeader decode_header(std::string_view s) {
  // Layout: s:<32>;r:<16>;p:<16>
  constexpr std::size_t kSession = 2;
  constexpr std::size_t kRpcTag = kSession + 32;
  constexpr std::size_t kRpc = kRpcTag + 3;
  constexpr std::size_t kParentTag = kRpc + 16;
  constexpr std::size_t kParent = kParentTag + 3;

  auto check_digits = [&](std::size_t pos, std::size_t width) {
    for (std::size_t i = pos; i < pos + width; ++i) {
      if (i >= s.size()) throw DecodeError("truncated trace header", i);
      if (s[i] == ';') throw DecodeError("field too short in trace header", i);
    }
  };

  expect_literal(s, 0, "s:");
  check_digits(kSession, 32);
  TraceHeader h;
  h.session_id.hi = read_hex(s, kSession, 16);
  h.session_id.lo = read_hex(s, kSession + 16, 16);
  expect_literal(s, kRpcTag, ";r:");
  check_digits(kRpc, 16);
  h.rpc_id = read_hex(s, kRpc, 16);
  expect_literal(s, kParentTag, ";p:");
  check_digits(kParent, 16);
  h.parent_rpc_id = read_hex(s, kParent, 16);
  if (s.size() != kEncodedHeaderSize) {
    throw DecodeError("trailing bytes after trace header", kEncodedHeaderSize);
  }
  if (h.rpc_id == kRootParent) throw DecodeError("rpc id 0 is reserved", kRpc);
  if (h.rpc_id == h.parent_rpc_id) throw DecodeError("rpc id equals parent id", kParent);
  return h;
}

// ---------------------------------------------------------------------------

BoundedQueueSink::BoundedQueueSink(std::size_t capacity) : capacity_(capacity) {}

void BoundedQueueSink::emit(EmittedEvent event) {
  std::lock_guard<std::mutex> lock(mu_);
  if (queue_.size() >= capacity_) {
    dropped_.fetch_add(1, std::memory_order_relaxed);
    return;
  }
  queue_.push_back(std::move(event));
}

void BoundedQueueSink::flush() { flushes_.fetch_add(1, std::memory_order_relaxed); }

std::vector<EmittedEvent> BoundedQueueSink::drain() {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<EmittedEvent> out(std::make_move_iterator(queue_.begin()),
                                std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

std::size_t BoundedQueueSink::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return queue_.size();
}

MonotonicClock::MonotonicClock() {
  using namespace std::chrono;
  auto wall = duration_cast<microseconds>(system_clock::now().time_since_epoch()).count();
  auto mono = duration_cast<microseconds>(steady_clock::now().time_since_epoch()).count();
  offset_us_ = wall - mono;
}

std::int64_t MonotonicClock::now_us() {
  using namespace std::chrono;
  return duration_cast<microseconds>(steady_clock::now().time_since_epoch()).count() +
         offset_us_;
}

// ---------------------------------------------------------------------------

Tracer::Tracer(std::string node, EventSink& sink, Clock& clock, std::uint64_t seed)
    : node_(std::move(node)),
      sink_(sink),
      clock_(clock),
      rng_state_(seed != 0 ? seed : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^
                                        std::random_device{}()) {}

std::uint64_t Tracer::next_random() {
  return splitmix64(rng_state_.fetch_add(0x9e3779b97f4a7c15ULL, std::memory_order_relaxed));
}

void Tracer::require_open(const SessionContext& ctx, const char* op) const {
  if (!ctx.open_) throw UsageError(std::string(op) + " on a closed session context");
}

void Tracer::emit_edge(const SessionContext& ctx, RpcId rpc, RpcId parent, Direction dir,
                       const EdgeOptions& opts, const std::string& default_peer) {
  const std::int64_t now = (opts.first_byte_us && opts.last_byte_us) ? 0 : clock_.now_us();
  RpcEdgeRecord e;
  e.session_id = ctx.header_.session_id;
  e.rpc_id = rpc;
  e.parent_rpc_id = parent;
  e.node = node_;
  e.peer = opts.peer.empty() ? default_peer : opts.peer;
  e.direction = dir;
  e.first_byte = {opts.first_byte_us.value_or(now), node_};
  e.last_byte = {opts.last_byte_us.value_or(opts.first_byte_us.value_or(now)), node_};
  if (e.last_byte.micros < e.first_byte.micros) {
    throw UsageError("edge last byte precedes first byte");
  }
  e.payload_bytes = opts.payload_bytes;
  sink_.emit(EmittedEvent{seq_.fetch_add(1, std::memory_order_relaxed), std::move(e)});
}

SessionContext Tracer::create(std::string_view in_header, const EdgeOptions& opts) {
  SessionContext ctx;
  if (in_header.empty()) {
    ctx.header_.session_id = {next_random(), next_random()};
    do {
      ctx.header_.rpc_id = next_random();
    } while (ctx.header_.rpc_id == kRootParent);
    ctx.header_.parent_rpc_id = kRootParent;
  } else {
    ctx.header_ = decode_header(in_header);
  }
  ctx.node_ = node_;
  ctx.caller_ = opts.peer;
  do {
    ctx.child_prefix_ = next_random() & 0xffffffffffffULL;
  } while (ctx.child_prefix_ == 0);
  emit_edge(ctx, ctx.header_.rpc_id, ctx.header_.parent_rpc_id, Direction::kRequestIn, opts,
            ctx.caller_);
  ctx.created_at_ = {opts.first_byte_us.value_or(clock_.now_us()), node_};
  return ctx;
}

std::string Tracer::sendtonext(SessionContext& ctx, const EdgeOptions& opts) {
  require_open(ctx, "sendtonext");
  if (ctx.issued_ >= kMaxChildren) throw UsageError("child rpc id space exhausted");
  ++ctx.issued_;
  const RpcId child = (ctx.child_prefix_ << 16) | ctx.issued_;
  emit_edge(ctx, child, ctx.header_.rpc_id, Direction::kRequestOut, opts, "");
  return encode_header({ctx.header_.session_id, child, ctx.header_.rpc_id});
}

void Tracer::recvfromnext(SessionContext& ctx, std::string_view in_header,
                          const EdgeOptions& opts) {
  require_open(ctx, "recvfromnext");
  TraceHeader h = decode_header(in_header);
  const std::uint64_t counter = h.rpc_id & 0xffff;
  if (h.session_id != ctx.header_.session_id || h.parent_rpc_id != ctx.header_.rpc_id ||
      (h.rpc_id >> 16) != ctx.child_prefix_ || counter == 0 || counter > ctx.issued_) {
    throw CorrelationError("response for rpc " + rpc_hex(h.rpc_id) +
                           " does not match any request issued by this context");
  }
  emit_edge(ctx, h.rpc_id, ctx.header_.rpc_id, Direction::kResponseIn, opts, "");
}

std::string Tracer::sendtoprev(SessionContext& ctx, const EdgeOptions& opts) {
  require_open(ctx, "sendtoprev");
  emit_edge(ctx, ctx.header_.rpc_id, ctx.header_.parent_rpc_id, Direction::kResponseOut, opts,
            ctx.caller_);
  return encode_header(ctx.header_);
}

void Tracer::annotate(SessionContext& ctx, std::string_view key, std::string_view value) {
  annotate(ctx, key, value, clock_.now_us());
}

void Tracer::annotate(SessionContext& ctx, std::string_view key, std::string_view value,
                      std::int64_t at_us) {
  require_open(ctx, "annotate");
  if (key.empty()) throw UsageError("annotation key must be non-empty");
  AnnotationRecord a;
  a.session_id = ctx.header_.session_id;
  a.rpc_id = ctx.header_.rpc_id;
  a.node = node_;
  a.key = std::string(key);
  a.value = std::string(value);
  a.at = {at_us, node_};
  sink_.emit(EmittedEvent{seq_.fetch_add(1, std::memory_order_relaxed), std::move(a)});
}

void Tracer::close(SessionContext& ctx) {
  require_open(ctx, "close");
  ctx.open_ = false;
  sink_.flush();
}

}  // namespace tracekit
