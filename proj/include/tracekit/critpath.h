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

// Critical path and per-service contributions.
//
// The path is the longest causal walk from the root rpc's request_in to the
// root's response_out. Walk weights:
//
//  * compute: C_f(next) - C_l(latest causal predecessor of next), on the
//    node's clock. Measuring from the latest predecessor makes waiting on a
//    slower parallel sibling count against that sibling's branch, so the
//    longest walk follows the slowest branch;
//  * network, per rpc: caller round trip minus callee residence, both
//    single-clock differences, so node clock offsets cancel;
//  * network, per edge at the callee: request deserialization and reply
//    serialization (C_l - C_f).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tracekit/causality.h"
#include "tracekit/model.h"

namespace tracekit {

/// C_f(e1) - C_l(e0). Both edges must be observed at the same node.
/// Throws ClockAnomalyError when negative.
std::int64_t service_latency(const RpcEdgeRecord& e0, const RpcEdgeRecord& e1);

/// C_l(edge) - C_f(edge) on the observing node's clock.
std::int64_t network_latency(const RpcEdgeRecord& edge);

/// Expects infer_all() to have run. Equal-length walks are broken by the
/// lexicographically smallest sequence of rpc ids along the walk.
CriticalPath critical_path(const ExecutionGraph& graph);

struct EndToEnd {
  std::int64_t latency_us = 0;
  std::string source;  // "navtiming" or "root_round_trip"
};

/// NavTiming onload when present, otherwise the root rpc's round trip at
/// the origin node. Returns latency 0 when neither is available.
EndToEnd end_to_end_latency(const SessionTrace& trace);

/// Per-service sums of compute segments on `path`, as a fraction of
/// `e2e_us`, sorted by latency (descending) then name. Throws
/// ValidationError when e2e_us <= 0.
std::vector<Contribution> service_contributions(const CriticalPath& path, std::int64_t e2e_us);

}  // namespace tracekit
