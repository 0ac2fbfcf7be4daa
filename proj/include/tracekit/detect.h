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

// Problem detection against per-key IQR baselines, plus user-side content
// diagnosis from NavTiming.

#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "tracekit/model.h"

namespace tracekit {

/// Confounder values, e.g. {page, user cluster, hour bucket}.
using BaselineKey = std::vector<std::string>;

struct DetectConfig {
  double k = 1.5;
  std::size_t min_samples = 20;
  double content_threshold = 0.25;
  std::size_t reservoir = 4096;

  void validate() const;
};

/// Linear interpolation between order statistics (R type 7) of an
/// ascending sample. Throws ValidationError on an empty sample.
double quantile_type7(const std::vector<double>& sorted, double p);

/// Sliding window of the most recent `capacity` samples, kept sorted.
class Baseline {
 public:
  explicit Baseline(std::size_t capacity = 4096) : capacity_(capacity) {}

  void add(double latency);
  std::size_t n() const { return sorted_.size(); }
  double q1() const;
  double q3() const;
  const std::vector<double>& sorted() const { return sorted_; }
  /// Samples in arrival order.
  const std::deque<double>& history() const { return order_; }

 private:
  std::size_t capacity_;
  std::deque<double> order_;
  std::vector<double> sorted_;
};

/// high iff x > q3 + k*IQR, low iff x < q1 - k*IQR.
Verdict iqr_verdict(double q1, double q3, double k, double x);

class BaselineStore {
 public:
  explicit BaselineStore(DetectConfig cfg = {});

  const DetectConfig& config() const { return cfg_; }

  /// Throws ValidationError for latency <= 0.
  void update_baseline(const BaselineKey& key, double latency);
  Detection detect_session(const BaselineKey& key, double observed_latency) const;

  std::optional<Baseline> baseline(const BaselineKey& key) const;
  std::vector<BaselineKey> keys() const;

  /// One JSON object per key: {"key": [...], "history": [...]}.
  void save(const std::filesystem::path& file) const;
  void load(const std::filesystem::path& file);

 private:
  DetectConfig cfg_;
  mutable std::shared_mutex mu_;
  std::map<BaselineKey, Baseline> baselines_;
};

/// Events are a serial chain; each one's fraction of onload is reported.
/// Throws ValidationError when onload_ms <= 0.
std::vector<ContentFinding> content_diagnosis(const NavTimingRecord& nav, double threshold);

}  // namespace tracekit
