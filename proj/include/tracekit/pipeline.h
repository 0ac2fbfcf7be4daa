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

// Per-session diagnosis: detect -> critical path -> network -> internet ->
// root cause, plus report rollups.
//
// Order-dependent state (latency baselines, per-link delay history) is
// computed in one sequential pass over sessions sorted by start time and
// session id; only the per-session analysis fans out to workers. Output is
// therefore identical for any --jobs value.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tracekit/detect.h"
#include "tracekit/ingest.h"
#include "tracekit/model.h"
#include "tracekit/rootcause.h"
#include "tracekit/topology.h"

namespace tracekit {

struct PipelineConfig {
  DetectConfig detect;
  std::int64_t queue_window_us = 60'000'000;
  double rpc_threshold = 0.05;
  std::size_t top_k = 5;  // contributors kept per report
  int jobs = 1;

  void validate() const;
};

struct NetworkInputs {
  const Topology* topology = nullptr;
  std::vector<ProblemGraphSummary> problems;
};

/// (page, origin datacenter, hour of day).
BaselineKey baseline_key(const SessionTrace& trace);

struct DiagnoseStats {
  std::size_t ready = 0;
  std::size_t diagnosed = 0;
  std::size_t deferred = 0;
  std::size_t failed = 0;
};

/// Diagnoses every session that is ready at `now_ms` and changed since its
/// last analysis. Sessions touching a volume-biased window are returned as
/// deferred reports and left pending. Reports are sorted by session id.
std::vector<DiagnosisReport> diagnose_sessions(SessionStore& store, BaselineStore& baselines,
                                               const NetworkInputs& net, const BoundRuleSet* rules,
                                               const PipelineConfig& cfg, std::int64_t now_ms,
                                               DiagnoseStats* stats = nullptr);

struct ServiceRollup {
  std::size_t sessions = 0;
  std::int64_t latency_us = 0;
  double fraction_sum = 0.0;

  bool operator==(const ServiceRollup&) const = default;
};

struct Rollups {
  std::size_t sessions = 0;
  std::size_t deferred = 0;
  std::map<std::string, std::size_t> verdicts;
  std::map<std::string, ServiceRollup> services;
  std::map<std::string, std::size_t> tiers;        // possible problem graphs, once per session
  std::map<std::string, std::size_t> bottlenecks;  // internet findings
  std::map<std::string, std::size_t> pathologies;

  bool operator==(const Rollups&) const = default;
};

Rollups compute_rollups(const std::vector<DiagnosisReport>& reports);
nlohmann::json rollups_to_json(const Rollups& r);

struct ReportQuery {
  std::optional<std::int64_t> from_us;  // inclusive, on start_us
  std::optional<std::int64_t> to_us;    // exclusive
  std::optional<std::string> service;   // has a contribution from it
  std::optional<std::string> verdict;
};

std::vector<DiagnosisReport> filter_reports(const std::vector<DiagnosisReport>& reports, const ReportQuery& q);

/// One line per report, then a {"type":"rollups"} line.
std::string render_jsonl(const std::vector<DiagnosisReport>& reports);
std::string render_table(const std::vector<DiagnosisReport>& reports);
std::string render_rollups_table(const Rollups& r);

/// Reads the "report" lines of a file written by render_jsonl. Throws
/// NotFoundError / DecodeError.
std::vector<DiagnosisReport> load_reports(const std::string& path);

}  // namespace tracekit
