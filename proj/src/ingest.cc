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

#include "tracekit/ingest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tracekit/errors.h"

namespace tracekit {

void IngestConfig::validate() const {
  if (delta_ms <= 0) throw ValidationError("delta_ms must be positive");
  if (bias_window_ms <= 0) throw ValidationError("bias_window_ms must be positive");
  if (!(bias_tolerance > 0.0 && bias_tolerance < 1.0)) {
    throw ValidationError("bias_tolerance must lie in (0, 1)");
  }
  if (!(ewma_alpha > 0.0 && ewma_alpha <= 1.0)) {
    throw ValidationError("ewma_alpha must lie in (0, 1]");
  }
}

BiasResult classify_volume(double expected, double observed, double tolerance) {
  BiasResult r;
  r.expected = expected;
  r.observed = observed;
  if (expected > 0.0 && observed < (1.0 - tolerance) * expected) {
    r.biased = true;
    r.deficit_fraction = (expected - observed) / expected;
  }
  return r;
}

// ---------------------------------------------------------------------------

VolumeTracker::VolumeTracker(IngestConfig cfg) : cfg_(cfg) {}

std::int64_t VolumeTracker::window_of(std::int64_t arrival_ms) const {
  std::int64_t w = arrival_ms / cfg_.bias_window_ms;
  if (arrival_ms < 0 && arrival_ms % cfg_.bias_window_ms != 0) --w;
  return w;
}

void VolumeTracker::observe(const VolumeKey& key, std::int64_t window, std::int64_t count) {
  counts_[key][window] += count;
}

std::int64_t VolumeTracker::observed(const VolumeKey& key, std::int64_t window) const {
  auto it = counts_.find(key);
  if (it == counts_.end()) return 0;
  auto w = it->second.find(window);
  return w == it->second.end() ? 0 : w->second;
}

std::optional<VolumeProfile> VolumeTracker::profile_before(const VolumeKey& key,
                                                           std::int64_t window) const {
  auto it = counts_.find(key);
  if (it == counts_.end() || it->second.empty()) return std::nullopt;
  const auto& series = it->second;
  const std::int64_t first = series.begin()->first;
  if (first >= window) return std::nullopt;

  VolumeProfile p;
  double mean = 0.0;
  double var = 0.0;
  const double a = cfg_.ewma_alpha;
  for (std::int64_t w = first; w < window; ++w) {
    auto c = series.find(w);
    double x = c == series.end() ? 0.0 : static_cast<double>(c->second);
    if (p.windows == 0) {
      mean = x;
    } else {
      double d = x - mean;
      mean += a * d;
      var = (1.0 - a) * (var + a * d * d);
    }
    ++p.windows;
  }
  p.expected = mean;
  p.dispersion = std::sqrt(var);
  return p;
}

BiasResult VolumeTracker::volume_bias(const VolumeKey& key, std::int64_t window,
                                      double covered) const {
  auto profile = profile_before(key, window);
  if (!profile) {
    BiasResult r;
    r.observed = static_cast<double>(observed(key, window));
    r.note = "untrained";
    return r;
  }
  return classify_volume(profile->expected * std::clamp(covered, 0.0, 1.0),
                         static_cast<double>(observed(key, window)), cfg_.bias_tolerance);
}

std::vector<VolumeKey> VolumeTracker::keys() const {
  std::vector<VolumeKey> out;
  for (const auto& [k, _] : counts_) out.push_back(k);
  return out;
}

// ---------------------------------------------------------------------------

std::string record_key(const SessionRecord& r) {
  struct Visitor {
    std::string operator()(const RpcEdgeRecord& e) const {
      return "E|" + rpc_hex(e.rpc_id) + "|" + e.node + "|" + std::string(to_string(e.direction)) +
             "|" + std::to_string(e.first_byte.micros);
    }
    std::string operator()(const AnnotationRecord& a) const {
      return "A|" + rpc_hex(a.rpc_id) + "|" + a.node + "|" + std::to_string(a.at.micros) + "|" +
             a.key + "|" + a.value;
    }
    std::string operator()(const NavTimingRecord&) const { return "N|"; }
    std::string operator()(const TcpSnapshot& t) const {
      return "T|" + t.connection_id + "|" + t.at.clock_id + "|" + std::to_string(t.at.micros);
    }
  };
  return std::visit(Visitor{}, r);
}

VolumeKey volume_key_of(const SessionRecord& r) {
  struct Visitor {
    VolumeKey operator()(const RpcEdgeRecord& e) const {
      return {service_of(e.node), datacenter_of(host_of(e.node))};
    }
    VolumeKey operator()(const AnnotationRecord& a) const {
      return {service_of(a.node), datacenter_of(host_of(a.node))};
    }
    VolumeKey operator()(const NavTimingRecord&) const { return {"navtiming", "user"}; }
    VolumeKey operator()(const TcpSnapshot& t) const {
      return {service_of(t.at.clock_id), datacenter_of(host_of(t.at.clock_id))};
    }
  };
  return std::visit(Visitor{}, r);
}

SessionStore::SessionStore(IngestConfig cfg) : cfg_(cfg), volume_(cfg) { cfg_.validate(); }

SessionStore::Outcome SessionStore::ingest_line(std::string_view line, std::int64_t arrival_ms) {
  SessionRecord rec;
  try {
    rec = decode_session_record(line);
    auto j = Json::parse(line.begin(), line.end());
    auto it = j.find("arrival_ms");
    if (it != j.end() && it->is_number_integer()) arrival_ms = it->get<std::int64_t>();
  } catch (const std::exception& e) {
    std::lock_guard<std::mutex> lock(mu_);
    quarantine_.push_back({std::string(line), e.what()});
    return Outcome::kQuarantined;
  }
  return ingest(rec, arrival_ms);
}

SessionStore::Outcome SessionStore::ingest(const SessionRecord& record, std::int64_t arrival_ms) {
  std::lock_guard<std::mutex> lock(mu_);
  return insert_locked(record, arrival_ms);
}

SessionStore::Outcome SessionStore::insert_locked(const SessionRecord& record,
                                                  std::int64_t arrival_ms) {
  auto& state = sessions_[session_of(record)];
  std::string key = record_key(record);
  auto it = state.records.find(key);
  if (it != state.records.end()) {
    ++duplicates_;
    // Conflicting payloads under one key resolve to the smaller encoding so
    // the outcome does not depend on arrival order.
    const std::string incoming = encode_session_record(record);
    if (incoming < encode_session_record(it->second.record)) {
      it->second.record = record;
    }
    it->second.arrival_ms = std::min(it->second.arrival_ms, arrival_ms);
    return Outcome::kDuplicate;
  }
  state.records.emplace(std::move(key), Stored{record, arrival_ms});
  state.last_arrival_ms = state.records.size() == 1
                              ? arrival_ms
                              : std::max(state.last_arrival_ms, arrival_ms);
  ++state.generation;
  VolumeKey vk = volume_key_of(record);
  std::int64_t window = volume_.window_of(arrival_ms);
  volume_.observe(vk, window);
  state.cells.insert({vk, window});
  max_arrival_ms_ = std::max(max_arrival_ms_, arrival_ms);
  return Outcome::kInserted;
}

bool SessionStore::session_ready(const SessionId& id, std::int64_t now_ms) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end() || it->second.records.empty()) return false;
  return now_ms - it->second.last_arrival_ms >= cfg_.delta_ms;
}

namespace {

bool edge_less(const RpcEdgeRecord& a, const RpcEdgeRecord& b) {
  return std::tie(a.node, a.first_byte.micros, a.direction, a.rpc_id, a.last_byte.micros,
                  a.parent_rpc_id, a.peer, a.payload_bytes) <
         std::tie(b.node, b.first_byte.micros, b.direction, b.rpc_id, b.last_byte.micros,
                  b.parent_rpc_id, b.peer, b.payload_bytes);
}

}  // namespace

AssembledSession SessionStore::assemble_session(const SessionId& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end() || it->second.records.empty()) {
    throw NotFoundError("no events for session " + id.hex());
  }
  AssembledSession out;
  out.generation = it->second.generation;
  SessionTrace& t = out.trace;
  t.session_id = id;
  for (const auto& [key, stored] : it->second.records) {
    std::visit(
        [&t](const auto& r) {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, RpcEdgeRecord>) {
            t.edges.push_back(r);
          } else if constexpr (std::is_same_v<T, AnnotationRecord>) {
            t.annotations.push_back(r);
          } else if constexpr (std::is_same_v<T, NavTimingRecord>) {
            t.navtiming = r;
          } else {
            t.tcp_snapshots.push_back(r);
          }
        },
        stored.record);
  }
  std::sort(t.edges.begin(), t.edges.end(), edge_less);
  std::sort(t.annotations.begin(), t.annotations.end(),
            [](const AnnotationRecord& a, const AnnotationRecord& b) {
              return std::tie(a.node, a.at.micros, a.rpc_id, a.key, a.value) <
                     std::tie(b.node, b.at.micros, b.rpc_id, b.key, b.value);
            });
  std::sort(t.tcp_snapshots.begin(), t.tcp_snapshots.end(),
            [](const TcpSnapshot& a, const TcpSnapshot& b) {
              return std::tie(a.connection_id, a.at.clock_id, a.at.micros) <
                     std::tie(b.connection_id, b.at.clock_id, b.at.micros);
            });

  // Completeness: every non-root rpc needs all four edges, the root needs
  // its request_in and response_out, and every parent must be present.
  std::map<RpcId, std::set<Direction>> dirs;
  std::map<RpcId, RpcId> parent;
  for (const auto& e : t.edges) {
    dirs[e.rpc_id].insert(e.direction);
    parent[e.rpc_id] = e.parent_rpc_id;
  }
  bool has_root = false;
  for (const auto& [rpc, ds] : dirs) {
    const bool root = parent[rpc] == kRootParent;
    has_root = has_root || root;
    std::vector<Direction> need = {Direction::kRequestIn, Direction::kResponseOut};
    if (!root) {
      need.push_back(Direction::kRequestOut);
      need.push_back(Direction::kResponseIn);
      if (!dirs.count(parent[rpc])) {
        out.gaps.push_back("rpc " + rpc_hex(rpc) + " has no parent " + rpc_hex(parent[rpc]));
      }
    }
    for (Direction d : need) {
      if (!ds.count(d)) {
        out.gaps.push_back("rpc " + rpc_hex(rpc) + " missing " + std::string(to_string(d)));
      }
    }
  }
  if (!has_root) out.gaps.push_back("no root rpc");
  t.assembled_complete = out.gaps.empty();
  return out;
}

std::vector<SessionId> SessionStore::sessions() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<SessionId> out;
  for (const auto& [id, s] : sessions_) {
    if (!s.records.empty()) out.push_back(id);
  }
  return out;
}

std::vector<SessionId> SessionStore::ready_sessions(std::int64_t now_ms) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<SessionId> out;
  for (const auto& [id, s] : sessions_) {
    if (!s.records.empty() && now_ms - s.last_arrival_ms >= cfg_.delta_ms) out.push_back(id);
  }
  return out;
}

std::uint64_t SessionStore::generation(const SessionId& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? 0 : it->second.generation;
}

std::int64_t SessionStore::last_arrival_ms(const SessionId& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("no events for session " + id.hex());
  return it->second.last_arrival_ms;
}

int SessionStore::mark_analyzed(const SessionId& id, std::uint64_t generation) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("no events for session " + id.hex());
  auto& s = it->second;
  if (!s.analyzed_generation || *s.analyzed_generation != generation) {
    s.analyzed_generation = generation;
    ++s.revision;
  }
  return s.revision;
}

bool SessionStore::needs_analysis(const SessionId& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return false;
  return !it->second.analyzed_generation ||
         *it->second.analyzed_generation != it->second.generation;
}

std::set<std::tuple<VolumeKey, std::int64_t>> SessionStore::volume_cells(
    const SessionId& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? std::set<std::tuple<VolumeKey, std::int64_t>>{}
                               : it->second.cells;
}

std::size_t SessionStore::stored() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::size_t n = 0;
  for (const auto& [_, s] : sessions_) n += s.records.size();
  return n;
}

std::uint64_t SessionStore::duplicates() const {
  std::lock_guard<std::mutex> lock(mu_);
  return duplicates_;
}

std::uint64_t SessionStore::quarantined() const {
  std::lock_guard<std::mutex> lock(mu_);
  return quarantine_.size();
}

std::vector<QuarantinedLine> SessionStore::quarantine() const {
  std::lock_guard<std::mutex> lock(mu_);
  return quarantine_;
}

std::int64_t SessionStore::max_arrival_ms() const {
  std::lock_guard<std::mutex> lock(mu_);
  return max_arrival_ms_;
}

// ---------------------------------------------------------------------------

void SessionStore::save(const std::filesystem::path& dir) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "records.jsonl", std::ios::trunc);
    for (const auto& [id, s] : sessions_) {
      for (const auto& [key, stored] : s.records) {
        Json j = Json::parse(encode_session_record(stored.record));
        j["arrival_ms"] = stored.arrival_ms;
        out << j.dump() << '\n';
      }
    }
  }
  {
    std::ofstream out(dir / "quarantine.jsonl", std::ios::trunc);
    for (const auto& q : quarantine_) {
      out << Json{{"line", q.line}, {"reason", q.reason}}.dump() << '\n';
    }
  }
  std::ofstream meta(dir / "meta.json", std::ios::trunc);
  meta << Json{{"v", kFormatVersion},
               {"duplicates", duplicates_},
               {"quarantined", quarantine_.size()}}
              .dump()
       << '\n';
}

std::unique_ptr<SessionStore> SessionStore::load(const std::filesystem::path& dir, IngestConfig cfg) {
  auto owned = std::make_unique<SessionStore>(cfg);
  SessionStore& store = *owned;
  if (!std::filesystem::exists(dir / "records.jsonl")) return owned;
  std::ifstream in(dir / "records.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    store.ingest_line(line, 0);
  }
  std::ifstream qin(dir / "quarantine.jsonl");
  while (std::getline(qin, line)) {
    if (line.empty()) continue;
    auto j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    store.quarantine_.push_back({j.value("line", ""), j.value("reason", "")});
  }
  std::ifstream min(dir / "meta.json");
  if (min) {
    auto j = Json::parse(min, nullptr, false);
    if (!j.is_discarded()) store.duplicates_ = j.value("duplicates", std::uint64_t{0});
  }
  // Loading replays stored records; they are history, not new arrivals.
  for (auto& [_, s] : store.sessions_) {
    s.analyzed_generation.reset();
    s.revision = -1;
  }
  return owned;
}

}  // namespace tracekit
