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

// Session execution graph and edge-level causality.
//
// The tracing headers give parent/child and request/response causality
// directly. Causality between sibling edges at one node is inferred after
// assembly from two happens-before predicates, both evaluated on timestamps
// of a single node's clock:
//
//   serialization: response r_i -> later request e_j iff C_f(r_i) < C_f(e_j)
//   redundancy:    response r_i -> reply r_0     iff C_f(r_i) < C_l(r_0)
//
// Ties are non-causal.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tracekit/model.h"

namespace tracekit {

enum class LinkKind {
  kParentChild,             // parent's request_in -> child's request_out
  kRequestResponse,         // e_i -> r_i, at the caller and at the callee
  kSiblingSerialization,    // r_i -> e_j at one node
  kRedundancyContribution,  // r_i -> r_0 at one node
  kMessageTransit,          // same message, sender side -> receiver side
};

std::string_view to_string(LinkKind k);

/// Links reference edges by index into ExecutionGraph::edges.
struct CausalLink {
  std::size_t from = 0;
  std::size_t to = 0;
  LinkKind kind = LinkKind::kParentChild;

  auto operator<=>(const CausalLink&) const = default;
};

struct RpcEntry {
  RpcId rpc_id = 0;
  RpcId parent_rpc_id = kRootParent;
  std::string caller;
  std::string callee;
  std::optional<std::size_t> request_out;
  std::optional<std::size_t> request_in;
  std::optional<std::size_t> response_out;
  std::optional<std::size_t> response_in;

  bool is_root() const { return parent_rpc_id == kRootParent; }
};

struct ExecutionGraph {
  SessionId session_id;
  std::vector<RpcEdgeRecord> edges;
  std::vector<std::string> nodes;
  std::vector<RpcEntry> rpcs;  // sorted by rpc_id
  std::set<CausalLink> links;
  /// response_in edges checked against their parent's reply and found late.
  std::set<std::size_t> non_causal;
  /// response_in edges left out of sibling inference (request missing).
  std::set<std::size_t> excluded;
  std::vector<std::string> gaps;

  const RpcEntry* find(RpcId id) const;
  /// Children of `parent` issued from `node`, ordered by rpc_id.
  std::vector<const RpcEntry*> children(RpcId parent, const std::string& node) const;
  std::vector<CausalLink> links_of(LinkKind kind) const;
};

/// One rpc entry per rpc id plus header-derived links. Broken parent linkage
/// leaves gap markers; sibling causality is not inferred here.
ExecutionGraph build_execution_graph(const SessionTrace& trace);

/// Adds sibling_serialization links among the outgoing calls made at `node`.
void infer_sibling_causality(ExecutionGraph& graph, const std::string& node);

/// Adds redundancy_contribution links into `reply` (the node's response_out
/// to its caller). Responses failing the predicate are marked non-causal.
void infer_redundancy(ExecutionGraph& graph, const std::string& node, std::size_t reply);

/// Runs both inferences at every node.
void infer_all(ExecutionGraph& graph);

/// true iff `links` restricted to `kinds` has no directed cycle.
bool is_acyclic(const ExecutionGraph& graph, const std::set<LinkKind>& kinds);

/// DOT rendering with link kinds as edge labels.
std::string to_dot(const ExecutionGraph& graph);

}  // namespace tracekit
