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

#include "tracekit/topology.h"

#include <deque>

#include "tracekit/errors.h"

namespace tracekit {

Topology::Topology(TopologySnapshot snapshot) : snap_(std::move(snapshot)) {
  for (const auto& d : snap_.devices) {
    if (!tier_.emplace(d.device_id, d.tier).second) {
      throw ValidationError("duplicate device " + d.device_id);
    }
    adj_[d.device_id];
  }
  for (const auto& [a, b] : snap_.links) {
    if (!tier_.count(a) || !tier_.count(b)) {
      throw ValidationError("link " + a + " - " + b + " names an unknown device");
    }
    if (a == b) throw ValidationError("self link on " + a);
    adj_[a].insert(b);
    adj_[b].insert(a);
  }
  for (const auto& [host, tor] : snap_.host_attachments) {
    if (!tier_.count(tor)) throw ValidationError("host " + host + " attached to unknown device " + tor);
  }
}

Tier Topology::tier_of(const std::string& device) const {
  auto it = tier_.find(device);
  if (it == tier_.end()) throw NotFoundError("unknown device " + device);
  return it->second;
}

const std::set<std::string>& Topology::neighbors(const std::string& device) const {
  static const std::set<std::string> kEmpty;
  auto it = adj_.find(device);
  return it == adj_.end() ? kEmpty : it->second;
}

bool Topology::adjacent(const std::string& a, const std::string& b) const {
  return neighbors(a).count(b) != 0;
}

const std::string& Topology::tor_of(const std::string& host) const {
  auto it = snap_.host_attachments.find(host);
  if (it == snap_.host_attachments.end()) throw NotFoundError("host " + host + " is not attached");
  return it->second;
}

std::map<std::string, int> Topology::distances(const std::string& device) const {
  std::map<std::string, int> dist;
  if (!tier_.count(device)) return dist;
  std::deque<std::string> q{device};
  dist[device] = 0;
  while (!q.empty()) {
    std::string v = q.front();
    q.pop_front();
    for (const auto& w : neighbors(v)) {
      if (dist.emplace(w, dist[v] + 1).second) q.push_back(w);
    }
  }
  return dist;
}

std::vector<std::string> Topology::candidate_devices(const std::string& src_host,
                                                     const std::string& dst_host) const {
  const std::string& s = tor_of(src_host);
  const std::string& t = tor_of(dst_host);
  auto ds = distances(s);
  auto dt = distances(t);
  auto it = ds.find(t);
  if (it == ds.end()) throw NotFoundError("no path between " + s + " and " + t);
  const int d = it->second;
  // v lies on a shortest s-t path iff d_s(v) + d_t(v) == d.
  std::vector<std::string> out;
  for (const auto& [v, dv] : ds) {
    auto jt = dt.find(v);
    if (jt != dt.end() && dv + jt->second == d) out.push_back(v);
  }
  return out;
}

TopologySnapshot make_fat_tree(const FatTreeParams& p) {
  if (p.pods < 1 || p.tors_per_pod < 1 || p.aggs_per_pod < 1 || p.cores < 0 || p.hosts_per_tor < 0) {
    throw ValidationError("fat-tree parameters must be positive");
  }
  TopologySnapshot t;
  for (int c = 0; c < p.cores; ++c) t.devices.push_back({"core" + std::to_string(c), Tier::kCore});
  for (int pod = 0; pod < p.pods; ++pod) {
    const std::string ps = std::to_string(pod);
    for (int a = 0; a < p.aggs_per_pod; ++a) {
      std::string agg = "agg" + ps + "-" + std::to_string(a);
      t.devices.push_back({agg, Tier::kAgg});
      for (int c = 0; c < p.cores; ++c) t.links.emplace_back(agg, "core" + std::to_string(c));
    }
    for (int r = 0; r < p.tors_per_pod; ++r) {
      std::string tor = "tor" + ps + "-" + std::to_string(r);
      t.devices.push_back({tor, Tier::kToR});
      for (int a = 0; a < p.aggs_per_pod; ++a) {
        t.links.emplace_back(tor, "agg" + ps + "-" + std::to_string(a));
      }
      for (int h = 0; h < p.hosts_per_tor; ++h) {
        t.host_attachments["h" + ps + "-" + std::to_string(r) + "-" + std::to_string(h)] = tor;
      }
    }
  }
  return t;
}

}  // namespace tracekit
