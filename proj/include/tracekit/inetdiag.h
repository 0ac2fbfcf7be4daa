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

// Internet-path diagnosis from server-side TCP snapshots.
//
// For a user-facing rpc served by an edge node (CDN):
//   delta_fb   first-byte delay seen by the user agent
//   delta_be   time the edge spent waiting on backends (0 on a cache hit)
//   delta_cdn  edge residence time minus delta_be
//   delta_rto  rto * (1 + retransmitted segments), a conservative bound on
//              the network's share including retransmissions
//
// Bottleneck rule (component comparison): the path component is
// srtt + min(retrans * rto, gap) where gap = max(0, fb - cdn - be); the
// server component is cdn + be. Internet iff path > server.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tracekit/causality.h"
#include "tracekit/model.h"

namespace tracekit {

struct RpcLatencyDecomposition {
  std::int64_t delta_fb_us = 0;
  std::int64_t delta_cdn_us = 0;
  std::int64_t delta_be_us = 0;
  std::int64_t delta_rto_us = 0;
  bool cache_hit = true;

  bool operator==(const RpcLatencyDecomposition&) const = default;
};

/// rttvar / srtt. Throws ValidationError when srtt <= 0.
double rtt_variation(const TcpSnapshot& snap);

std::int64_t rto_delay(const TcpSnapshot& snap);

struct BottleneckComponents {
  std::int64_t path_us = 0;
  std::int64_t server_us = 0;
};

BottleneckComponents bottleneck_components(const RpcLatencyDecomposition& d, const TcpSnapshot& snap);
/// Ties go to kCdnBackend.
Bottleneck classify_bottleneck(const RpcLatencyDecomposition& d, const TcpSnapshot& snap);

/// max(0, fb - cdn - be - rto).
std::int64_t download_stack_bound(const RpcLatencyDecomposition& d);

/// Snapshot for `rpc`: the one named by a "conn_id" annotation at the
/// callee if present, else the callee's snapshot nearest request_in.
const TcpSnapshot* select_snapshot(const SessionTrace& trace, const ExecutionGraph& g, const RpcEntry& rpc);

/// Needs all four edges of `rpc`. Throws ValidationError on negative
/// components.
RpcLatencyDecomposition decompose(const ExecutionGraph& g, const RpcEntry& rpc, const TcpSnapshot& snap);

/// Findings for every rpc whose callee has TCP snapshots.
std::vector<InternetFinding> diagnose_internet(const SessionTrace& trace, const ExecutionGraph& g);

}  // namespace tracekit
