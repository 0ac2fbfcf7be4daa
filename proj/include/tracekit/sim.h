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

// Deterministic generators with ground truth.
//
// Sessions are produced by driving real Tracer instances (one per node)
// with explicit edge timestamps, so the tracing library is exercised end to
// end. Every node has a constant clock offset; all truth is kept in true
// time. Loss, duplication and reordering are applied after emission.
//
// Same seed, same output, byte for byte: only std::mt19937_64 is used and
// all distributions are derived from it here.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tracekit/codec.h"
#include "tracekit/model.h"
#include "tracekit/topology.h"

namespace tracekit {

class SimRng {
 public:
  explicit SimRng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }
  double uniform();                          // [0, 1)
  double uniform(double lo, double hi);
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive
  bool bernoulli(double p) { return uniform() < p; }
  double normal();
  double exponential(double mean);
  double lognormal_median(double median, double sigma);
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  }

 private:
  std::mt19937_64 eng_;
};

// ---------------------------------------------------------------------------
// Serving sessions

struct ComputeDist {
  double median_ms = 1.0;
  double sigma = 0.25;  // log-space; 0 makes compute deterministic
};

struct CallSpec {
  std::string service;
  ComputeDist compute;
  std::string fanout = "serial";  // serial | parallel | redundant
  int k = 1;                      // redundant: reply after k responses
  std::int64_t request_bytes = 400;
  std::int64_t response_bytes = 4000;
  std::vector<CallSpec> calls;
};

struct SlowService {
  std::string service;
  double extra_ms = 200.0;
  double fraction = 1.0;  // of sessions
};

/// Extra queueing on requests from one service to another.
struct LinkQueue {
  std::string from_service;
  std::string to_service;
  double min_ms = 0.7;
  double max_ms = 1.3;
  double fraction = 1.0;  // of requests
};

/// Events from `service` arriving in [start_ms, end_ms) are kept with
/// probability `keep` (a collection outage).
struct VolumeDrop {
  std::string service;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  double keep = 0.2;
};

/// User agent -> CDN edge -> (on a miss) origin sessions with TCP snapshots.
struct CdnSpec {
  bool enabled = false;
  int users = 50;
  std::string edge_service = "cdn";
  std::string origin_service = "origin";
  double internet_fraction = 0.5;
  double stack_delay_max_ms = 40.0;
};

struct ServingScenario {
  std::uint64_t seed = 1;
  int sessions = 100;
  double interarrival_ms = 100.0;
  std::int64_t start_us = 0;
  std::string page = "home";
  FatTreeParams topology;
  std::map<std::string, std::string> placement;  // service -> host
  CallSpec blueprint;
  bool random_blueprints = false;
  int random_services = 8;
  int random_depth = 3;
  int random_fanout = 4;
  double prop_us = 20.0;
  double bytes_per_us = 1250.0;  // 10 Gbit/s
  double jitter_mean_us = 10.0;
  double clock_offset_max_us = 0.0;
  double arrival_delay_mean_ms = 20.0;
  double loss_rate = 0.0;
  double duplication_rate = 0.0;
  bool shuffle = false;
  bool navtiming = false;
  std::optional<SlowService> slow;
  std::vector<LinkQueue> queues;
  std::optional<VolumeDrop> volume_drop;
  CdnSpec cdn;

  /// Throws ValidationError.
  void validate() const;
};

struct RpcTruth {
  RpcId rpc_id = 0;
  RpcId parent_rpc_id = kRootParent;
  std::string caller;
  std::string callee;
  std::int64_t injected_queue_us = 0;
  std::optional<Bottleneck> bottleneck;  // CDN rpcs only
  std::int64_t stack_delay_us = 0;       // CDN rpcs only
};

struct SessionTruth {
  SessionId session_id;
  std::int64_t start_us = 0;  // true time of the root request
  std::vector<RpcTruth> rpcs;
  /// (r_i, e_j): the response of rpc i precedes the request of rpc j at the
  /// same caller.
  std::set<std::pair<RpcId, RpcId>> serialization;
  /// Responses that arrive before their parent's reply.
  std::set<RpcId> contributors;
  /// Redundant responses that arrive after the reply.
  std::set<RpcId> late;
  /// Compute on the true critical path, per service.
  std::map<std::string, std::int64_t> path_compute_us;
  std::int64_t e2e_us = 0;
  bool slow_injected = false;
  bool slow_on_path = false;
  std::size_t events = 0;
  std::size_t lost = 0;
  std::size_t duplicated = 0;
  bool edge_lost = false;
};

struct SimRecord {
  SessionRecord record;
  std::int64_t arrival_ms = 0;
};

struct SessionBundle {
  std::vector<SimRecord> records;  // delivery order
  TopologySnapshot topology;
  std::map<std::string, std::int64_t> clock_offsets_us;
  std::vector<SessionTruth> truth;
};

SessionBundle generate_sessions(const ServingScenario& sc);

/// JSONL line with a top-level "arrival_ms".
std::string sim_record_line(const SimRecord& r);

// ---------------------------------------------------------------------------
// Syslog

/// MODULE_FAIL, LINK_DOWN, LINK_UP, STP_CHANGE, IF_CHANGE, BGP_DOWN,
/// FAN_FAIL, CRC_ERRORS.
std::vector<Template> standard_templates();

struct RuleCorpusScenario {
  std::uint64_t seed = 1;
  FatTreeParams topology{4, 4, 2, 4, 0};
  int templates = 200;
  int rules = 20;
  std::int64_t messages = 100000;
  std::int64_t horizon_s = 100000;
  double inter_fraction = 0.3;
  double follow_prob = 0.9;
  std::int64_t max_lag_us = 800000;
  std::int64_t causes_min = 60;
  std::int64_t causes_max = 150;
  bool independent = false;  // no planted rules
  std::int64_t start_us = 0;

  void validate() const;
};

struct SyslogBundle {
  std::vector<Template> templates;
  std::vector<SyslogMessage> messages;  // time order, template ids set
  std::vector<CausalRule> rules;        // planted, or the cascade rule set
  TopologySnapshot topology;
};

SyslogBundle generate_rule_corpus(const RuleCorpusScenario& sc);

struct CascadeScenario {
  std::uint64_t seed = 1;
  FatTreeParams topology{4, 4, 2, 4, 0};
  int cascades = 10000;
  double tor_share = 0.93;
  double agg_share = 0.05;  // remainder on cores
  std::int64_t spacing_us = 120'000'000;
  std::int64_t start_us = 0;

  void validate() const;
};

struct CascadeTruth {
  std::string root_device;
  Tier tier = Tier::kToR;
  std::int64_t at_us = 0;
  std::vector<std::string> devices;
};

struct CascadeBundle {
  SyslogBundle syslog;
  std::vector<CascadeTruth> truth;
};

/// MODULE_FAIL -> LINK_DOWN on the root device, IF_CHANGE on a neighbor.
CascadeBundle generate_cascades(const CascadeScenario& sc);

/// MODULE_FAIL -> LINK_DOWN -> STP_CHANGE on a ToR, then IF_CHANGE on an
/// adjacent AGG.
CascadeBundle multi_device_cascade(std::int64_t at_us = 0);
/// LINK_DOWN / LINK_UP alternating on one ToR.
CascadeBundle l2_flap(std::int64_t at_us = 0, int flaps = 5);

// ---------------------------------------------------------------------------
// Scenario files

struct ScenarioFile {
  std::optional<ServingScenario> serving;
  std::optional<RuleCorpusScenario> rules;
  std::optional<CascadeScenario> cascades;
};

/// Throws ValidationError on unknown keys or invalid values.
ScenarioFile parse_scenario(const nlohmann::json& j);
ScenarioFile load_scenario(const std::string& path);

/// Writes events.jsonl, topology.json, truth.jsonl, syslog.log,
/// templates.jsonl and rules.jsonl (whichever apply) into `dir`.
void write_bundle(const ScenarioFile& sc, const std::string& dir);

nlohmann::json truth_to_json(const SessionTruth& t);

}  // namespace tracekit
