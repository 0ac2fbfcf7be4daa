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

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tracekit/model.h"

namespace tracekit {

/// Indexed view over a TopologySnapshot. Links are undirected.
class Topology {
 public:
  Topology() = default;
  /// Throws ValidationError on links naming unknown devices or hosts
  /// attached to non-devices.
  explicit Topology(TopologySnapshot snapshot);

  const TopologySnapshot& snapshot() const { return snap_; }

  bool has_device(const std::string& id) const { return tier_.count(id) != 0; }
  /// Throws NotFoundError for unknown devices.
  Tier tier_of(const std::string& device) const;
  const std::set<std::string>& neighbors(const std::string& device) const;
  bool adjacent(const std::string& a, const std::string& b) const;
  /// Throws NotFoundError for unattached hosts.
  const std::string& tor_of(const std::string& host) const;

  /// Devices on any shortest path between the hosts' ToRs, sorted.
  std::vector<std::string> candidate_devices(const std::string& src_host,
                                             const std::string& dst_host) const;

  /// Hop distances from `device` to every reachable device.
  std::map<std::string, int> distances(const std::string& device) const;

 private:
  TopologySnapshot snap_;
  std::map<std::string, Tier> tier_;
  std::map<std::string, std::set<std::string>> adj_;
};

/// Pods of `tors_per_pod` ToRs, each ToR linked to every AGG of its pod,
/// every AGG linked to every core. Hosts are named "h<pod>-<tor>-<i>".
struct FatTreeParams {
  int pods = 2;
  int tors_per_pod = 2;
  int aggs_per_pod = 2;
  int cores = 2;
  int hosts_per_tor = 2;
};

TopologySnapshot make_fat_tree(const FatTreeParams& p);

}  // namespace tracekit
