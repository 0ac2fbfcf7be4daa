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

#include "tracekit/detect.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>

#include <json.hpp>

#include "tracekit/errors.h"

namespace tracekit {

void DetectConfig::validate() const {
  if (!(k >= 0)) throw ValidationError("iqr k must be >= 0");
  if (min_samples == 0) throw ValidationError("min_samples must be >= 1");
  if (!(content_threshold > 0 && content_threshold <= 1)) {
    throw ValidationError("content threshold must be in (0, 1]");
  }
  if (reservoir == 0) throw ValidationError("reservoir must be >= 1");
}

double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw ValidationError("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void Baseline::add(double latency) {
  order_.push_back(latency);
  sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), latency), latency);
  while (order_.size() > capacity_) {
    auto it = std::lower_bound(sorted_.begin(), sorted_.end(), order_.front());
    sorted_.erase(it);
    order_.pop_front();
  }
}

double Baseline::q1() const { return quantile_type7(sorted_, 0.25); }
double Baseline::q3() const { return quantile_type7(sorted_, 0.75); }

Verdict iqr_verdict(double q1, double q3, double k, double x) {
  const double iqr = q3 - q1;
  if (x > q3 + k * iqr) return Verdict::kHigh;
  if (x < q1 - k * iqr) return Verdict::kLow;
  return Verdict::kNormal;
}

BaselineStore::BaselineStore(DetectConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void BaselineStore::update_baseline(const BaselineKey& key, double latency) {
  if (!(latency > 0)) throw ValidationError("baseline latency must be > 0");
  std::unique_lock lock(mu_);
  auto it = baselines_.try_emplace(key, Baseline(cfg_.reservoir)).first;
  it->second.add(latency);
}

Detection BaselineStore::detect_session(const BaselineKey& key, double observed) const {
  Detection d;
  d.baseline_key = key;
  d.k = cfg_.k;
  d.e2e_ms = observed;
  std::shared_lock lock(mu_);
  auto it = baselines_.find(key);
  if (it == baselines_.end()) return d;
  const Baseline& b = it->second;
  d.samples = b.n();
  d.q1 = b.q1();
  d.q3 = b.q3();
  d.verdict = b.n() < cfg_.min_samples ? Verdict::kInsufficientData
                                       : iqr_verdict(d.q1, d.q3, cfg_.k, observed);
  return d;
}

std::optional<Baseline> BaselineStore::baseline(const BaselineKey& key) const {
  std::shared_lock lock(mu_);
  auto it = baselines_.find(key);
  if (it == baselines_.end()) return std::nullopt;
  return it->second;
}

std::vector<BaselineKey> BaselineStore::keys() const {
  std::shared_lock lock(mu_);
  std::vector<BaselineKey> out;
  for (const auto& [k, _] : baselines_) out.push_back(k);
  return out;
}

void BaselineStore::save(const std::filesystem::path& file) const {
  std::shared_lock lock(mu_);
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error("cannot write " + file.string());
  for (const auto& [key, b] : baselines_) {
    nlohmann::json j{{"type", "baseline"}, {"v", 1}, {"key", key},
                     {"history", std::vector<double>(b.history().begin(), b.history().end())}};
    out << j.dump() << '\n';
  }
}

void BaselineStore::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) return;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("key") || !j.contains("history")) {
      throw DecodeError(file.string() + ": bad baseline on line " + std::to_string(lineno), 0);
    }
    auto key = j["key"].get<BaselineKey>();
    for (double x : j["history"].get<std::vector<double>>()) update_baseline(key, x);
  }
}

std::vector<ContentFinding> content_diagnosis(const NavTimingRecord& nav, double threshold) {
  if (!(nav.onload_ms > 0)) throw ValidationError("onload time is zero; fractions undefined");
  std::vector<ContentFinding> out;
  for (const auto& ev : nav.events) {
    const double ms = static_cast<double>(elapsed_us(ev.start, ev.end)) / 1000.0;
    const double fraction = ms / nav.onload_ms;
    out.push_back({ev.name, ms, fraction, fraction >= threshold});
  }
  return out;
}

}  // namespace tracekit
