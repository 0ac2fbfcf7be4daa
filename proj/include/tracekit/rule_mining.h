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

// Causal rule mining over template instance streams.
//
// Stage 1 keeps template pairs whose bucketed count series correlate:
// Pearson between the cause series x_t and the effect series over the same
// and the next bucket, y_t + y_{t+1}, with series stacked over devices
// (intra-device) or over directed adjacent device pairs (inter-device).
//
// Stage 2 is a quasi-experimental comparison:
//   treated:   instances of T_i;  a of them followed by T_j within one bucket
//              (same device: at or after; adjacent device: strictly after)
//   untreated: device buckets not exposed to T_i (no T_i in the bucket or the
//              one before); c of them contain T_j
// A rule T_i -> T_j is emitted when the odds ratio, a one-sided
// two-proportion z test and a G test all pass, and a >= min_support.
// The rule score is the risk difference a/(a+b) - c/(c+d).

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tracekit/model.h"
#include "tracekit/topology.h"

namespace tracekit {

class TemplateTimeseries {
 public:
  explicit TemplateTimeseries(std::int64_t bucket_us = 1'000'000);

  std::int64_t bucket_us() const { return bucket_us_; }

  void add(const std::string& template_id, const std::string& device, std::int64_t at_us);
  /// Unmatched messages are ignored; returns whether the message was added.
  bool add(const SyslogMessage& msg);

  std::size_t size() const { return size_; }
  std::int64_t bucket_of(std::int64_t at_us) const;
  std::int64_t first_bucket() const { return first_bucket_; }
  std::int64_t last_bucket() const { return last_bucket_; }
  std::int64_t num_buckets() const { return size_ == 0 ? 0 : last_bucket_ - first_bucket_ + 1; }

  std::vector<std::string> templates() const;
  std::vector<std::string> devices() const;
  std::int64_t count(const std::string& template_id, const std::string& device, std::int64_t bucket) const;
  /// Sorted instance times of a template on a device.
  const std::vector<std::int64_t>& times(const std::string& template_id, const std::string& device) const;
  /// template -> device -> sorted times.
  const std::map<std::string, std::map<std::string, std::vector<std::int64_t>>>& instances() const;

 private:
  void sort_if_needed() const;

  std::int64_t bucket_us_;
  std::size_t size_ = 0;
  std::int64_t first_bucket_ = 0;
  std::int64_t last_bucket_ = 0;
  mutable bool sorted_ = true;
  mutable std::map<std::string, std::map<std::string, std::vector<std::int64_t>>> inst_;
  std::set<std::string> devices_;
};

struct MiningConfig {
  double corr_threshold = 0.01;
  double odds_ratio_threshold = 5.0;
  double z_critical = 2.326;  // one-sided, alpha = 0.01
  double g_critical = 6.635;  // chi-square(1), alpha = 0.01
  std::int64_t min_support = 5;
  std::int64_t min_buckets = 10;

  void validate() const;
};

struct QedTable {
  std::int64_t a = 0;  // treated, effect followed
  std::int64_t b = 0;  // treated, no effect
  std::int64_t c = 0;  // untreated, effect present
  std::int64_t d = 0;  // untreated, no effect

  bool operator==(const QedTable&) const = default;
};

struct QedStats {
  double treated_rate = 0.0;
  double untreated_rate = 0.0;
  double odds_ratio = 0.0;  // with 0.5 continuity correction
  double z = 0.0;
  double g = 0.0;
};

QedStats qed_stats(const QedTable& t);

struct MiningStats {
  std::size_t candidate_pairs = 0;
  std::size_t correlated_pairs = 0;
  std::size_t degenerate = 0;
  std::size_t emitted = 0;
};

/// Pearson correlation of the stacked series for (cause, effect, scope);
/// nullopt when either series is constant.
std::optional<double> stacked_correlation(const TemplateTimeseries& ts, const std::string& cause,
                                          const std::string& effect, RuleScope scope,
                                          const Topology* topo);

/// 2x2 table for (cause, effect, scope). Inter-device needs a topology.
QedTable qed_table(const TemplateTimeseries& ts, const std::string& cause,
                   const std::string& effect, RuleScope scope, const Topology* topo);

/// Rules sorted by score (descending), then cause, effect, scope. `topo`
/// may be null, in which case only intra-device rules are mined. Throws
/// ValidationError when the series covers fewer than min_buckets buckets.
std::vector<CausalRule> mine_causal_rules(const TemplateTimeseries& ts, const Topology* topo,
                                          const MiningConfig& cfg = {}, MiningStats* stats = nullptr);

}  // namespace tracekit
