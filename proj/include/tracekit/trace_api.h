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

// In-process tracing library called by services at every RPC edge.
//
// A service calls create() when a request arrives, sendtonext() before each
// downstream call, recvfromnext() for each downstream response, sendtoprev()
// when replying, annotate() for service-specific events and close() once the
// request is fully served. The library keeps no per-session table: all
// session state travels in the SessionContext and in the serialized header
// that the host program carries inside its own RPC protocol.
//
// Events are pushed to an EventSink and never block beyond the enqueue.

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tracekit/model.h"

namespace tracekit {

/// "s:<32 hex>;r:<16 hex>;p:<16 hex>", lowercase.
std::string encode_header(const TraceHeader& h);
/// Throws DecodeError naming the offending byte offset.
TraceHeader decode_header(std::string_view s);

inline constexpr std::size_t kEncodedHeaderSize = 2 + 32 + 3 + 16 + 3 + 16;

struct EmittedEvent {
  std::uint64_t seq = 0;
  std::variant<RpcEdgeRecord, AnnotationRecord> record;
};

class EventSink {
 public:
  virtual ~EventSink() = default;
  /// Must be safe to call from many threads at once.
  virtual void emit(EmittedEvent event) = 0;
  virtual void flush() {}
};

class NullSink final : public EventSink {
 public:
  void emit(EmittedEvent) override {}
};

/// Bounded in-memory queue. When full, new events are dropped and counted.
class BoundedQueueSink final : public EventSink {
 public:
  explicit BoundedQueueSink(std::size_t capacity);

  void emit(EmittedEvent event) override;
  void flush() override;

  /// Removes and returns everything queued so far, in enqueue order.
  std::vector<EmittedEvent> drain();
  std::size_t size() const;
  std::uint64_t dropped() const { return dropped_.load(std::memory_order_relaxed); }
  std::uint64_t flushes() const { return flushes_.load(std::memory_order_relaxed); }

 private:
  const std::size_t capacity_;
  mutable std::mutex mu_;
  std::deque<EmittedEvent> queue_;
  std::atomic<std::uint64_t> dropped_{0};
  std::atomic<std::uint64_t> flushes_{0};
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_us() = 0;
};

/// steady_clock anchored to the wall clock at construction.
class MonotonicClock final : public Clock {
 public:
  MonotonicClock();
  std::int64_t now_us() override;

 private:
  std::int64_t offset_us_;
};

/// Test and simulation clock.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::int64_t start_us = 0) : now_(start_us) {}
  std::int64_t now_us() override { return now_.load(std::memory_order_relaxed); }
  void set(std::int64_t us) { now_.store(us, std::memory_order_relaxed); }
  void advance(std::int64_t us) { now_.fetch_add(us, std::memory_order_relaxed); }

 private:
  std::atomic<std::int64_t> now_;
};

/// Per-edge overrides. Without them the edge is stamped "now" with
/// first_byte == last_byte. Hosts that observe byte boundaries (or the
/// simulator) pass them explicitly.
struct EdgeOptions {
  std::optional<std::int64_t> first_byte_us;
  std::optional<std::int64_t> last_byte_us;
  std::int64_t payload_bytes = 0;
  std::string peer;
};

/// Handle for one incoming RPC at one node.
///
/// Everything except the open flag and the child counter is fixed at
/// create(). A context is used by one logical thread at a time.
class SessionContext {
 public:
  const TraceHeader& header() const { return header_; }
  const std::string& node() const { return node_; }
  const Timestamp& created_at() const { return created_at_; }
  bool open() const { return open_; }
  /// Number of child RPC ids issued so far.
  std::uint32_t children_issued() const { return issued_; }

 private:
  friend class Tracer;

  TraceHeader header_;
  std::string node_;
  Timestamp created_at_;
  std::string caller_;
  std::uint64_t child_prefix_ = 0;  // 48 bits
  std::uint32_t issued_ = 0;
  bool open_ = true;
};

class Tracer {
 public:
  /// Child ids carry the counter in the low 16 bits.
  static constexpr std::uint32_t kMaxChildren = 0xffff;

  /// `seed` drives session and rpc id generation; 0 picks a random seed.
  Tracer(std::string node, EventSink& sink, Clock& clock, std::uint64_t seed = 0);

  const std::string& node() const { return node_; }

  SessionContext create(std::string_view in_header, const EdgeOptions& opts = {});
  std::string sendtonext(SessionContext& ctx, const EdgeOptions& opts = {});
  void recvfromnext(SessionContext& ctx, std::string_view in_header,
                    const EdgeOptions& opts = {});
  std::string sendtoprev(SessionContext& ctx, const EdgeOptions& opts = {});
  void annotate(SessionContext& ctx, std::string_view key, std::string_view value);
  void annotate(SessionContext& ctx, std::string_view key, std::string_view value,
                std::int64_t at_us);
  void close(SessionContext& ctx);

 private:
  std::uint64_t next_random();
  void require_open(const SessionContext& ctx, const char* op) const;
  void emit_edge(const SessionContext& ctx, RpcId rpc, RpcId parent, Direction dir,
                 const EdgeOptions& opts, const std::string& default_peer);

  std::string node_;
  EventSink& sink_;
  Clock& clock_;
  std::atomic<std::uint64_t> rng_state_;
  std::atomic<std::uint64_t> seq_{0};
};

}  // namespace tracekit
