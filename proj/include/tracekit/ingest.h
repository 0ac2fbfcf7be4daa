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

// Event ingestion. The transport delivers events late, out of order,
// duplicated or not at all; the store absorbs all of that with idempotent
// inserts and only hands a session to analysis once no event has arrived
// for delta_ms. A per-(service, datacenter) volume profile guards against
// analysing windows where a chunk of the stream is obviously missing.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "tracekit/codec.h"
#include "tracekit/model.h"

namespace tracekit {

struct IngestConfig {
  std::int64_t delta_ms = 5000;
  std::int64_t bias_window_ms = 60000;
  double bias_tolerance = 0.1;
  /// EWMA weight of the newest window in the expected-volume estimate.
  double ewma_alpha = 0.3;

  /// Throws ValidationError.
  void validate() const;
};

struct VolumeKey {
  std::string service;
  std::string datacenter;

  auto operator<=>(const VolumeKey&) const = default;
};

struct VolumeProfile {
  double expected = 0.0;
  double dispersion = 0.0;  // EW standard deviation
  std::size_t windows = 0;
};

struct BiasResult {
  bool biased = false;
  double deficit_fraction = 0.0;
  double expected = 0.0;
  double observed = 0.0;
  std::string note;  // "untrained" when there is no prior window
};

/// biased iff observed < (1 - tolerance) * expected.
BiasResult classify_volume(double expected, double observed, double tolerance);

/// Event counts per (service, datacenter) and bias window.
class VolumeTracker {
 public:
  explicit VolumeTracker(IngestConfig cfg = {});

  void observe(const VolumeKey& key, std::int64_t window, std::int64_t count = 1);
  std::int64_t observed(const VolumeKey& key, std::int64_t window) const;

  /// Profile trained on every window of `key` strictly before `window`.
  /// Windows with no events between the first and `window` count as zero.
  std::optional<VolumeProfile> profile_before(const VolumeKey& key, std::int64_t window) const;

  /// `covered` scales the expectation for a window that is only partially
  /// elapsed (e.g. the last window of a replay).
  BiasResult volume_bias(const VolumeKey& key, std::int64_t window, double covered = 1.0) const;

  std::vector<VolumeKey> keys() const;
  std::int64_t window_of(std::int64_t arrival_ms) const;

 private:
  IngestConfig cfg_;
  std::map<VolumeKey, std::map<std::int64_t, std::int64_t>> counts_;
};

struct AssembledSession {
  SessionTrace trace;
  /// Human-readable reasons for assembled_complete == false.
  std::vector<std::string> gaps;
  /// Bumped by every newly stored record; a changed generation after an
  /// analysis means a straggler arrived.
  std::uint64_t generation = 0;
};

struct QuarantinedLine {
  std::string line;
  std::string reason;
};

class SessionStore {
 public:
  enum class Outcome { kInserted, kDuplicate, kQuarantined };

  explicit SessionStore(IngestConfig cfg = {});

  const IngestConfig& config() const { return cfg_; }

  /// Decodes one JSONL line. An optional top-level "arrival_ms" overrides
  /// `arrival_ms`. Undecodable lines are quarantined, never thrown.
  Outcome ingest_line(std::string_view line, std::int64_t arrival_ms);
  Outcome ingest(const SessionRecord& record, std::int64_t arrival_ms);

  /// true iff now - last arrival >= delta_ms. Unknown sessions are not ready.
  bool session_ready(const SessionId& id, std::int64_t now_ms) const;
  /// Throws NotFoundError for unknown or empty sessions.
  AssembledSession assemble_session(const SessionId& id) const;

  std::vector<SessionId> sessions() const;
  std::vector<SessionId> ready_sessions(std::int64_t now_ms) const;

  std::uint64_t generation(const SessionId& id) const;
  std::int64_t last_arrival_ms(const SessionId& id) const;
  /// Records the generation an analysis was computed for and returns its
  /// revision number (0 for the first analysis, +1 per recomputation).
  int mark_analyzed(const SessionId& id, std::uint64_t generation);
  /// true if the session changed since its last analysis (or never analysed).
  bool needs_analysis(const SessionId& id) const;
  /// Bias windows (per service and datacenter) that the session's events fell in.
  std::set<std::tuple<VolumeKey, std::int64_t>> volume_cells(const SessionId& id) const;

  std::size_t stored() const;
  std::uint64_t duplicates() const;
  std::uint64_t quarantined() const;
  std::vector<QuarantinedLine> quarantine() const;
  std::int64_t max_arrival_ms() const;

  const VolumeTracker& volume() const { return volume_; }

  /// Writes records.jsonl (sorted), quarantine.jsonl and meta.json.
  void save(const std::filesystem::path& dir) const;
  /// Loads a directory written by save(); a missing directory yields an
  /// empty store.
  static std::unique_ptr<SessionStore> load(const std::filesystem::path& dir, IngestConfig cfg);

 private:
  struct Stored {
    SessionRecord record;
    std::int64_t arrival_ms = 0;
  };
  struct SessionState {
    std::map<std::string, Stored> records;
    std::int64_t last_arrival_ms = 0;
    std::uint64_t generation = 0;
    std::optional<std::uint64_t> analyzed_generation;
    int revision = -1;
    std::set<std::tuple<VolumeKey, std::int64_t>> cells;
  };

  Outcome insert_locked(const SessionRecord& record, std::int64_t arrival_ms);

  IngestConfig cfg_;
  mutable std::mutex mu_;
  std::map<SessionId, SessionState> sessions_;
  VolumeTracker volume_;
  std::uint64_t duplicates_ = 0;
  std::vector<QuarantinedLine> quarantine_;
  std::int64_t max_arrival_ms_ = 0;
};

/// Idempotency key of a record: (session, rpc, node, direction, first byte)
/// for edges, analogous natural keys for the other record types.
std::string record_key(const SessionRecord& r);

/// The (service, datacenter) a record is accounted to for volume tracking.
VolumeKey volume_key_of(const SessionRecord& r);

}  // namespace tracekit
