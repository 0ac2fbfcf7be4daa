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

#include "tracekit/queueing.h"

#include <algorithm>

#include "tracekit/errors.h"

namespace tracekit {

DelayHistory::DelayHistory(std::int64_t window_us) : window_us_(window_us) {
  if (window_us <= 0) throw ValidationError("delay window must be positive");
}

void DelayHistory::add(const std::string& a, const std::string& b, DelaySample s) {
  auto& q = pairs_[{a, b}];
  auto pos = std::upper_bound(q.begin(), q.end(), s.at_us,
                              [](std::int64_t at, const DelaySample& x) { return at < x.at_us; });
  q.insert(pos, s);
  const std::int64_t horizon = q.back().at_us - window_us_;
  while (!q.empty() && q.front().at_us <= horizon) q.pop_front();
}

std::optional<std::int64_t> DelayHistory::window_min(const std::string& a, const std::string& b,
                                                     std::int64_t at_us) const {
  auto it = pairs_.find({a, b});
  if (it == pairs_.end()) return std::nullopt;
  std::optional<std::int64_t> best;
  for (const auto& s : it->second) {
    if (s.at_us <= at_us - window_us_ || s.at_us > at_us) continue;
    if (!best || s.delta_us < *best) best = s.delta_us;
  }
  return best;
}

std::optional<std::int64_t> DelayHistory::queueing_delay(const std::string& a, const std::string& b,
                                                         DelaySample s) const {
  auto m = window_min(a, b, s.at_us);
  if (!m) return std::nullopt;
  return s.delta_us - std::min(*m, s.delta_us);
}

std::size_t DelayHistory::size(const std::string& a, const std::string& b) const {
  auto it = pairs_.find({a, b});
  return it == pairs_.end() ? 0 : it->second.size();
}

DelaySample request_delta(const RpcEdgeRecord& request_out, const RpcEdgeRecord& request_in) {
  if (request_out.direction != Direction::kRequestOut || request_in.direction != Direction::kRequestIn ||
      request_out.rpc_id != request_in.rpc_id) {
    throw ValidationError("request delta needs the request_out and request_in of one rpc");
  }
  // Deliberately across clocks; the offset is removed by the window minimum.
  return {request_out.first_byte.micros, request_in.first_byte.micros - request_out.first_byte.micros};
}

bool detect_rpc_problem(std::int64_t delay_us, std::int64_t e2e_us, double threshold) {
  if (e2e_us <= 0) throw ValidationError("end-to-end latency must be positive");
  return static_cast<double>(delay_us) / static_cast<double>(e2e_us) >= threshold;
}

}  // namespace tracekit
