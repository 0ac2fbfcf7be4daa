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

// Problem graphs: cascades of template instances inside a time window.
//
// The timeline is cut into windows of `window_us` that overlap by
// `overlap_us`. In each window, instances are merged into one node per
// (device, template); intra-device rule edges are added first, then
// inter-device edges between adjacent devices, each phase in order of the
// earliest instance pair that satisfies the rule. An edge that would close
// a cycle is dropped. Weakly connected components with at least two nodes
// are graphs, as are isolated nodes with severity <= max_singleton_severity.
// A graph belongs to the window whose slot [start + overlap/2,
// start + overlap/2 + window - overlap) holds its earliest instance. Slots
// tile the timeline, so each cascade is reported once, and whole when it
// spans less than overlap/2.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tracekit/model.h"
#include "tracekit/topology.h"

namespace tracekit {

struct ProblemGraphConfig {
  std::int64_t window_us = 60'000'000;
  std::int64_t overlap_us = 10'000'000;
  int max_singleton_severity = 2;

  void validate() const;
};

struct ProblemGraphStats {
  std::size_t windows = 0;
  std::size_t dropped_cycle_edges = 0;
  std::size_t unmatched_messages = 0;
};

/// Messages must carry template ids; unmatched ones are counted and skipped.
/// Inter-device edges need `topo`; without it only intra-device edges form.
std::vector<ProblemGraph> mine_problem_graphs(const std::vector<SyslogMessage>& messages,
                                              const std::vector<CausalRule>& rules,
                                              const Topology* topo,
                                              const ProblemGraphConfig& cfg = {},
                                              ProblemGraphStats* stats = nullptr);

/// Root node: the in-degree-0 node with the earliest first instance
/// (lowest index on ties).
std::size_t root_node(const ProblemGraph& g);

/// Summary with the root's device tier ("unknown" when the device is not
/// in `topo`).
ProblemGraphSummary summarize(const ProblemGraph& g, std::size_t graph_id, const Topology* topo);

/// Graphs touching any candidate device whose window overlaps
/// [start_us, end_us]. Results are labeled "possible".
std::vector<ProblemGraphSummary> correlate_rpc_problems(const std::vector<std::string>& candidates,
                                                        const std::vector<ProblemGraphSummary>& graphs,
                                                        std::int64_t start_us, std::int64_t end_us);

}  // namespace tracekit
