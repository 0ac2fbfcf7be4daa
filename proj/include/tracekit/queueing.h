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

// Queueing delay between two nodes without synchronized clocks.
//
// For a request observed leaving A and arriving at B, the raw delta
// C_f^B - C_f^A mixes propagation, serialization, queueing and the clock
// offset between A and B. Subtracting the minimum delta seen on the same
// ordered pair over the last window removes the constant parts, leaving the
// queueing component. Arithmetic is integral so a shifted clock gives
// bit-identical results.

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tracekit/model.h"

namespace tracekit {

struct DelaySample {
  std::int64_t at_us = 0;     // sender clock
  std::int64_t delta_us = 0;  // receiver first byte - sender first byte
};

class DelayHistory {
 public:
  explicit DelayHistory(std::int64_t window_us = 60'000'000);

  std::int64_t window_us() const { return window_us_; }

  /// Samples older than (newest - window) are evicted.
  void add(const std::string& a, const std::string& b, DelaySample s);

  /// Minimum delta over (at - window, at]; nullopt if the window is empty.
  std::optional<std::int64_t> window_min(const std::string& a, const std::string& b,
                                         std::int64_t at_us) const;

  /// delta - min(window_min, delta); nullopt when the pair has no history
  /// in the window.
  std::optional<std::int64_t> queueing_delay(const std::string& a, const std::string& b,
                                             DelaySample s) const;

  std::size_t size(const std::string& a, const std::string& b) const;

 private:
  std::int64_t window_us_;
  std::map<std::pair<std::string, std::string>, std::deque<DelaySample>> pairs_;
};

/// The request delta of an rpc: request_in first byte at the callee minus
/// request_out first byte at the caller, each on its own clock.
DelaySample request_delta(const RpcEdgeRecord& request_out, const RpcEdgeRecord& request_in);

/// delay / e2e >= threshold. Throws ValidationError when e2e_us <= 0.
bool detect_rpc_problem(std::int64_t delay_us, std::int64_t e2e_us, double threshold = 0.05);

}  // namespace tracekit
