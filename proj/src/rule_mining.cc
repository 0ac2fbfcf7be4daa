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

#include "tracekit/rule_mining.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "tracekit/errors.h"

namespace tracekit {

TemplateTimeseries::TemplateTimeseries(std::int64_t bucket_us) : bucket_us_(bucket_us) {
  if (bucket_us <= 0) throw ValidationError("bucket width must be positive");
}

std::int64_t TemplateTimeseries::bucket_of(std::int64_t at_us) const {
  // Floor division, so negative times bucket consistently.
  std::int64_t q = at_us / bucket_us_;
  if (at_us % bucket_us_ != 0 && at_us < 0) --q;
  return q;
}

void TemplateTimeseries::add(const std::string& template_id, const std::string& device, std::int64_t at_us) {
  auto& v = inst_[template_id][device];
  if (!v.empty() && at_us < v.back()) sorted_ = false;
  v.push_back(at_us);
  devices_.insert(device);
  const std::int64_t b = bucket_of(at_us);
  if (size_ == 0) {
    first_bucket_ = last_bucket_ = b;
  } else {
    first_bucket_ = std::min(first_bucket_, b);
    last_bucket_ = std::max(last_bucket_, b);
  }
  ++size_;
}

bool TemplateTimeseries::add(const SyslogMessage& msg) {
  if (!msg.template_id) return false;
  add(*msg.template_id, msg.device, msg.at.micros);
  return true;
}

void TemplateTimeseries::sort_if_needed() const {
  if (sorted_) return;
  for (auto& [_, by_dev] : inst_) {
    for (auto& [__, v] : by_dev) std::sort(v.begin(), v.end());
  }
  sorted_ = true;
}

std::vector<std::string> TemplateTimeseries::templates() const {
  std::vector<std::string> out;
  for (const auto& [t, _] : inst_) out.push_back(t);
  return out;
}

std::vector<std::string> TemplateTimeseries::devices() const { return {devices_.begin(), devices_.end()}; }

const std::vector<std::int64_t>& TemplateTimeseries::times(const std::string& template_id,
                                                           const std::string& device) const {
  static const std::vector<std::int64_t> kEmpty;
  sort_if_needed();
  auto it = inst_.find(template_id);
  if (it == inst_.end()) return kEmpty;
  auto jt = it->second.find(device);
  return jt == it->second.end() ? kEmpty : jt->second;
}

const std::map<std::string, std::map<std::string, std::vector<std::int64_t>>>&
TemplateTimeseries::instances() const {
  sort_if_needed();
  return inst_;
}

std::int64_t TemplateTimeseries::count(const std::string& template_id, const std::string& device,
                                       std::int64_t bucket) const {
  const auto& v = times(template_id, device);
  auto lo = std::lower_bound(v.begin(), v.end(), bucket * bucket_us_);
  auto hi = std::lower_bound(v.begin(), v.end(), (bucket + 1) * bucket_us_);
  return hi - lo;
}

void MiningConfig::validate() const {
  if (corr_threshold < -1 || corr_threshold > 1) throw ValidationError("corr threshold must be in [-1, 1]");
  if (odds_ratio_threshold <= 0) throw ValidationError("odds-ratio threshold must be positive");
  if (min_support < 1) throw ValidationError("min support must be >= 1");
  if (min_buckets < 1) throw ValidationError("min buckets must be >= 1");
}

QedStats qed_stats(const QedTable& t) {
  QedStats s;
  const double a = static_cast<double>(t.a), b = static_cast<double>(t.b);
  const double c = static_cast<double>(t.c), d = static_cast<double>(t.d);
  const double n1 = a + b, n0 = c + d, n = n1 + n0;
  s.treated_rate = n1 > 0 ? a / n1 : 0.0;
  s.untreated_rate = n0 > 0 ? c / n0 : 0.0;
  s.odds_ratio = ((a + 0.5) * (d + 0.5)) / ((b + 0.5) * (c + 0.5));
  if (n1 > 0 && n0 > 0) {
    const double p = (a + c) / n;
    const double se = std::sqrt(p * (1 - p) * (1 / n1 + 1 / n0));
    s.z = se > 0 ? (s.treated_rate - s.untreated_rate) / se : 0.0;
  }
  // G = 2 * sum O ln(O / E) over the four cells.
  const double rows[2] = {n1, n0};
  const double cols[2] = {a + c, b + d};
  const double obs[2][2] = {{a, b}, {c, d}};
  double g = 0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double e = n > 0 ? rows[i] * cols[j] / n : 0;
      if (obs[i][j] > 0 && e > 0) g += obs[i][j] * std::log(obs[i][j] / e);
    }
  }
  s.g = 2 * g;
  return s;
}

namespace {

using BucketCounts = std::vector<std::pair<std::int64_t, std::int64_t>>;  // sorted (bucket, count)

BucketCounts bucketize(const TemplateTimeseries& ts, const std::vector<std::int64_t>& times) {
  BucketCounts out;
  for (std::int64_t t : times) {
    std::int64_t b = ts.bucket_of(t);
    if (!out.empty() && out.back().first == b) {
      ++out.back().second;
    } else {
      out.emplace_back(b, 1);
    }
  }
  return out;
}

struct Moments {
  long double sx = 0, sxx = 0, sy = 0, syy = 0, sxy = 0, n = 0;
};

// Sums of the effect series y'_b = y_b + y_{b+1} over b in [first, last].
void effect_sums(const BucketCounts& y, std::int64_t first, std::int64_t last, long double mult,
                 Moments& m) {
  // Nonzero y'_b sit at b = k and b = k - 1 for each nonzero y_k; walk them
  // in order, merging the two.
  auto add = [&](std::int64_t b, long double v) {
    if (b < first || b > last) return;
    m.sy += mult * v;
    m.syy += mult * v * v;
  };
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto [b, c] = y[i];
    const bool prev_adjacent = i > 0 && y[i - 1].first == b - 1;
    const std::int64_t next = (i + 1 < y.size() && y[i + 1].first == b + 1) ? y[i + 1].second : 0;
    // y'_{b-1} = y_{b-1} + y_b was already emitted when y_{b-1} is nonzero.
    if (!prev_adjacent) add(b - 1, static_cast<long double>(c));
    add(b, static_cast<long double>(c + next));
  }
}

void cause_sums(const BucketCounts& x, long double mult, Moments& m) {
  for (const auto& [_, c] : x) {
    m.sx += mult * c;
    m.sxx += mult * static_cast<long double>(c) * c;
  }
}

long double cross(const BucketCounts& x, const BucketCounts& y) {
  long double s = 0;
  std::size_t j = 0;
  for (const auto& [b, c] : x) {
    while (j < y.size() && y[j].first < b) ++j;
    std::int64_t v = 0;
    if (j < y.size() && y[j].first == b) v += y[j].second;
    std::size_t k = j;
    while (k < y.size() && y[k].first <= b) ++k;
    if (k < y.size() && y[k].first == b + 1) v += y[k].second;
    s += static_cast<long double>(c) * static_cast<long double>(v);
  }
  return s;
}

std::optional<double> pearson(const Moments& m) {
  const long double vx = m.n * m.sxx - m.sx * m.sx;
  const long double vy = m.n * m.syy - m.sy * m.sy;
  if (vx <= 0 || vy <= 0) return std::nullopt;
  return static_cast<double>((m.n * m.sxy - m.sx * m.sy) / std::sqrt(vx * vy));
}

std::set<std::int64_t> exposed_buckets(const TemplateTimeseries& ts, const std::vector<std::int64_t>& times) {
  std::set<std::int64_t> out;
  for (std::int64_t t : times) {
    std::int64_t b = ts.bucket_of(t);
    out.insert(b);
    if (b + 1 <= ts.last_bucket()) out.insert(b + 1);
  }
  return out;
}

// Effect counts per bucket summed over the neighbors of `device`.
BucketCounts neighbor_counts(const TemplateTimeseries& ts, const std::string& effect, const Topology& topo,
                             const std::string& device) {
  std::map<std::int64_t, std::int64_t> acc;
  for (const auto& n : topo.neighbors(device)) {
    for (const auto& [b, c] : bucketize(ts, ts.times(effect, n))) acc[b] += c;
  }
  return {acc.begin(), acc.end()};
}

bool followed(const std::vector<std::int64_t>& effect, std::int64_t t, std::int64_t horizon, bool strict) {
  auto it = strict ? std::upper_bound(effect.begin(), effect.end(), t)
                   : std::lower_bound(effect.begin(), effect.end(), t);
  return it != effect.end() && *it <= t + horizon;
}

}  // namespace

std::optional<double> stacked_correlation(const TemplateTimeseries& ts, const std::string& cause,
                                          const std::string& effect, RuleScope scope,
                                          const Topology* topo) {
  const std::int64_t first = ts.first_bucket(), last = ts.last_bucket();
  const long double nb = static_cast<long double>(ts.num_buckets());
  Moments m;
  if (scope == RuleScope::kIntraDevice) {
    const auto devices = ts.devices();
    m.n = nb * static_cast<long double>(devices.size());
    for (const auto& d : devices) {
      const auto x = bucketize(ts, ts.times(cause, d));
      const auto y = bucketize(ts, ts.times(effect, d));
      cause_sums(x, 1, m);
      effect_sums(y, first, last, 1, m);
      m.sxy += cross(x, y);
    }
  } else {
    // Unit (d, b): cause count on d against the effect summed over d's
    // neighbors, so a hub's correlation is not diluted by its degree.
    if (topo == nullptr) return std::nullopt;
    const auto& devs = topo->snapshot().devices;
    m.n = nb * static_cast<long double>(devs.size());
    for (const auto& dev : devs) {
      const auto& d = dev.device_id;
      const auto x = bucketize(ts, ts.times(cause, d));
      const auto y = neighbor_counts(ts, effect, *topo, d);
      cause_sums(x, 1, m);
      effect_sums(y, first, last, 1, m);
      m.sxy += cross(x, y);
    }
  }
  return pearson(m);
}

QedTable qed_table(const TemplateTimeseries& ts, const std::string& cause, const std::string& effect,
                   RuleScope scope, const Topology* topo) {
  QedTable t;
  const std::int64_t nb = ts.num_buckets();
  const std::int64_t h = ts.bucket_us();
  if (scope == RuleScope::kIntraDevice) {
    const auto devices = ts.devices();
    std::int64_t exposed = 0;
    for (const auto& d : devices) {
      const auto& ct = ts.times(cause, d);
      const auto& et = ts.times(effect, d);
      for (std::int64_t x : ct) (followed(et, x, h, false) ? t.a : t.b)++;
      const auto ex = exposed_buckets(ts, ct);
      exposed += static_cast<std::int64_t>(ex.size());
      for (const auto& [b, _] : bucketize(ts, et)) {
        if (!ex.count(b)) ++t.c;
      }
    }
    t.d = static_cast<std::int64_t>(devices.size()) * nb - exposed - t.c;
  } else {
    if (topo == nullptr) throw ValidationError("inter-device table needs a topology");
    const auto& devs = topo->snapshot().devices;
    std::int64_t exposed = 0;
    for (const auto& dev : devs) {
      const auto& d = dev.device_id;
      const auto& ct = ts.times(cause, d);
      for (std::int64_t x : ct) {
        bool hit = false;
        for (const auto& n : topo->neighbors(d)) hit = hit || followed(ts.times(effect, n), x, h, true);
        (hit ? t.a : t.b)++;
      }
      const auto ex = exposed_buckets(ts, ct);
      exposed += static_cast<std::int64_t>(ex.size());
      for (const auto& [bkt, _] : neighbor_counts(ts, effect, *topo, d)) {
        if (!ex.count(bkt)) ++t.c;
      }
    }
    const std::int64_t units = static_cast<std::int64_t>(devs.size()) * nb;
    t.d = units - exposed - t.c;
  }
  return t;
}

std::vector<CausalRule> mine_causal_rules(const TemplateTimeseries& ts, const Topology* topo,
                                          const MiningConfig& cfg, MiningStats* stats) {
  cfg.validate();
  MiningStats local;
  MiningStats& st = stats ? *stats : local;
  st = {};
  std::vector<CausalRule> rules;
  if (ts.size() == 0) return rules;
  if (ts.num_buckets() < cfg.min_buckets) {
    throw ValidationError("history covers " + std::to_string(ts.num_buckets()) + " buckets; need " +
                          std::to_string(cfg.min_buckets));
  }
  const std::int64_t h = ts.bucket_us();

  // Candidate pairs: cause instances with an effect instance within one
  // bucket after them, on the same or an adjacent device.
  std::map<std::string, std::vector<std::pair<std::int64_t, std::string>>> by_device;
  for (const auto& [tmpl, devs] : ts.instances()) {
    for (const auto& [dev, times] : devs) {
      for (std::int64_t t : times) by_device[dev].emplace_back(t, tmpl);
    }
  }
  for (auto& [_, v] : by_device) std::sort(v.begin(), v.end());

  std::map<std::tuple<std::string, std::string, RuleScope>, std::int64_t> cand;
  for (const auto& [dev, v] : by_device) {
    for (const auto& [t, ti] : v) {
      std::set<std::string> seen;
      auto lo = std::lower_bound(v.begin(), v.end(), std::make_pair(t, std::string()));
      for (auto it = lo; it != v.end() && it->first <= t + h; ++it) {
        if (it->second != ti) seen.insert(it->second);
      }
      for (const auto& tj : seen) ++cand[{ti, tj, RuleScope::kIntraDevice}];
      if (topo == nullptr || !topo->has_device(dev)) continue;
      std::set<std::string> seen_inter;
      for (const auto& n : topo->neighbors(dev)) {
        auto nt = by_device.find(n);
        if (nt == by_device.end()) continue;
        const auto& w = nt->second;
        auto jt = std::upper_bound(w.begin(), w.end(), t,
                                   [](std::int64_t x, const auto& e) { return x < e.first; });
        for (; jt != w.end() && jt->first <= t + h; ++jt) seen_inter.insert(jt->second);
      }
      for (const auto& tj : seen_inter) ++cand[{ti, tj, RuleScope::kInterDevice}];
    }
  }

  for (const auto& [key, support] : cand) {
    if (support < cfg.min_support) continue;
    ++st.candidate_pairs;
    const auto& [ti, tj, scope] = key;
    auto corr = stacked_correlation(ts, ti, tj, scope, topo);
    if (!corr) {
      ++st.degenerate;
      continue;
    }
    if (*corr < cfg.corr_threshold) continue;
    ++st.correlated_pairs;
    const QedTable t = qed_table(ts, ti, tj, scope, topo);
    if (t.c + t.d <= 0 || t.a + t.b <= 0) {
      ++st.degenerate;
      continue;
    }
    const QedStats s = qed_stats(t);
    if (t.a >= cfg.min_support && s.odds_ratio >= cfg.odds_ratio_threshold && s.z > cfg.z_critical &&
        s.g > cfg.g_critical) {
      rules.push_back({ti, tj, scope, s.treated_rate - s.untreated_rate, t.a});
    }
  }
  std::sort(rules.begin(), rules.end(), [](const CausalRule& x, const CausalRule& y) {
    if (x.score != y.score) return x.score > y.score;
    return std::tie(x.cause, x.effect, x.scope) < std::tie(y.cause, y.effect, y.scope);
  });
  st.emitted = rules.size();
  return rules;
}

}  // namespace tracekit
