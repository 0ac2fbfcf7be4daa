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

#include "tracekit/causality.h"

#include <algorithm>
#include <sstream>

#include "tracekit/errors.h"

namespace tracekit {

std::string_view to_string(LinkKind k) {
  switch (k) {
    case LinkKind::kParentChild: return "parent_child";
    case LinkKind::kRequestResponse: return "request_response";
    case LinkKind::kSiblingSerialization: return "sibling_serialization";
    case LinkKind::kRedundancyContribution: return "redundancy_contribution";
    case LinkKind::kMessageTransit: return "message_transit";
  }
  return "?";
}

const RpcEntry* ExecutionGraph::find(RpcId id) const {
  auto it = std::lower_bound(rpcs.begin(), rpcs.end(), id,
                             [](const RpcEntry& e, RpcId v) { return e.rpc_id < v; });
  return (it != rpcs.end() && it->rpc_id == id) ? &*it : nullptr;
}

std::vector<const RpcEntry*> ExecutionGraph::children(RpcId parent,
                                                      const std::string& node) const {
  std::vector<const RpcEntry*> out;
  for (const auto& r : rpcs) {
    if (!r.is_root() && r.parent_rpc_id == parent && r.caller == node) out.push_back(&r);
  }
  return out;
}

std::vector<CausalLink> ExecutionGraph::links_of(LinkKind kind) const {
  std::vector<CausalLink> out;
  for (const auto& l : links) {
    if (l.kind == kind) out.push_back(l);
  }
  return out;
}

namespace {

void place(ExecutionGraph& g, RpcEntry& entry, std::optional<std::size_t>& slot,
           std::size_t idx) {
  if (slot) {
    // Same direction seen twice with different first bytes; keep the
    // earliest observation.
    const auto& cur = g.edges[*slot];
    const auto& cand = g.edges[idx];
    g.gaps.push_back("rpc " + rpc_hex(entry.rpc_id) + " has repeated " +
                     std::string(to_string(cand.direction)) + " edges");
    if (cand.first_byte.micros < cur.first_byte.micros) slot = idx;
    return;
  }
  slot = idx;
}

}  // namespace

ExecutionGraph build_execution_graph(const SessionTrace& trace) {
  ExecutionGraph g;
  g.session_id = trace.session_id;
  g.edges = trace.edges;

  std::map<RpcId, RpcEntry> by_id;
  std::set<std::string> nodes;
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto& e = g.edges[i];
    nodes.insert(e.node);
    auto& entry = by_id[e.rpc_id];
    entry.rpc_id = e.rpc_id;
    entry.parent_rpc_id = e.parent_rpc_id;
    switch (e.direction) {
      case Direction::kRequestOut:
        entry.caller = e.node;
        place(g, entry, entry.request_out, i);
        break;
      case Direction::kResponseIn:
        entry.caller = e.node;
        place(g, entry, entry.response_in, i);
        break;
      case Direction::kRequestIn:
        entry.callee = e.node;
        place(g, entry, entry.request_in, i);
        break;
      case Direction::kResponseOut:
        entry.callee = e.node;
        place(g, entry, entry.response_out, i);
        break;
    }
  }
  g.nodes.assign(nodes.begin(), nodes.end());
  for (auto& [id, entry] : by_id) {
    // The root's caller (the user agent) is not traced; its peer names it.
    if (entry.is_root() && entry.caller.empty() && entry.request_in) entry.caller = g.edges[*entry.request_in].peer;
    g.rpcs.push_back(std::move(entry));
  }

  for (const auto& r : g.rpcs) {
    // Request/response causality at both ends of the rpc.
    if (r.request_out && r.response_in) {
      g.links.insert({*r.request_out, *r.response_in, LinkKind::kRequestResponse});
    }
    if (r.request_in && r.response_out) {
      g.links.insert({*r.request_in, *r.response_out, LinkKind::kRequestResponse});
    }
    if (r.request_out && r.request_in) {
      g.links.insert({*r.request_out, *r.request_in, LinkKind::kMessageTransit});
    }
    if (r.response_out && r.response_in) {
      g.links.insert({*r.response_out, *r.response_in, LinkKind::kMessageTransit});
    }
    if (r.is_root()) continue;

    const RpcEntry* parent = g.find(r.parent_rpc_id);
    if (parent == nullptr) {
      g.gaps.push_back("rpc " + rpc_hex(r.rpc_id) + " references missing parent " +
                       rpc_hex(r.parent_rpc_id));
      continue;
    }
    if (parent->request_in && r.request_out) {
      if (g.edges[*parent->request_in].node == g.edges[*r.request_out].node) {
        g.links.insert({*parent->request_in, *r.request_out, LinkKind::kParentChild});
      } else {
        g.gaps.push_back("rpc " + rpc_hex(r.rpc_id) + " issued from a node other than its parent's callee");
      }
    }
  }
  for (const auto& r : g.rpcs) {
    if (!r.request_out && !r.is_root()) g.gaps.push_back("rpc " + rpc_hex(r.rpc_id) + " missing request_out");
    if (!r.request_in) g.gaps.push_back("rpc " + rpc_hex(r.rpc_id) + " missing request_in");
    if (!r.response_out) g.gaps.push_back("rpc " + rpc_hex(r.rpc_id) + " missing response_out");
    if (!r.response_in && !r.is_root()) g.gaps.push_back("rpc " + rpc_hex(r.rpc_id) + " missing response_in");
  }
  return g;
}

void infer_sibling_causality(ExecutionGraph& graph, const std::string& node) {
  // Group outgoing calls at `node` by the incoming rpc they serve.
  std::map<RpcId, std::vector<const RpcEntry*>> groups;
  for (const auto& r : graph.rpcs) {
    if (!r.is_root() && r.caller == node) groups[r.parent_rpc_id].push_back(&r);
  }
  for (const auto& [parent, siblings] : groups) {
    for (const RpcEntry* ri : siblings) {
      if (!ri->response_in) continue;
      if (!ri->request_out) {
        graph.excluded.insert(*ri->response_in);
        continue;
      }
      const auto& r_i = graph.edges[*ri->response_in];
      for (const RpcEntry* ej : siblings) {
        if (ej == ri || !ej->request_out) continue;
        const auto& e_j = graph.edges[*ej->request_out];
        // Both edges are observed at `node`; elapsed_us enforces one clock.
        if (elapsed_us(r_i.first_byte, e_j.first_byte) > 0) {
          graph.links.insert({*ri->response_in, *ej->request_out, LinkKind::kSiblingSerialization});
        }
      }
    }
  }
}

void infer_redundancy(ExecutionGraph& graph, const std::string& node, std::size_t reply) {
  if (reply >= graph.edges.size()) {
    graph.gaps.push_back("redundancy check without a reply edge at " + node);
    return;
  }
  const auto& r0 = graph.edges[reply];
  if (r0.node != node || r0.direction != Direction::kResponseOut) {
    throw ValidationError("reply edge must be the node's response_out");
  }
  for (const RpcEntry* child : graph.children(r0.rpc_id, node)) {
    if (!child->response_in) continue;
    if (!child->request_out) {
      graph.excluded.insert(*child->response_in);
      continue;
    }
    const auto& r_i = graph.edges[*child->response_in];
    if (elapsed_us(r_i.first_byte, r0.last_byte) > 0) {
      graph.links.insert({*child->response_in, reply, LinkKind::kRedundancyContribution});
    } else {
      graph.non_causal.insert(*child->response_in);
    }
  }
}

void infer_all(ExecutionGraph& graph) {
  for (const auto& node : graph.nodes) infer_sibling_causality(graph, node);
  for (const auto& r : graph.rpcs) {
    if (r.response_out) {
      infer_redundancy(graph, graph.edges[*r.response_out].node, *r.response_out);
    } else if (!graph.children(r.rpc_id, r.callee).empty()) {
      graph.gaps.push_back("rpc " + rpc_hex(r.rpc_id) + " has no reply; redundancy not inferred");
    }
  }
}

bool is_acyclic(const ExecutionGraph& graph, const std::set<LinkKind>& kinds) {
  const std::size_t n = graph.edges.size();
  std::vector<std::vector<std::size_t>> adj(n);
  std::vector<int> indeg(n, 0);
  for (const auto& l : graph.links) {
    if (!kinds.count(l.kind)) continue;
    adj[l.from].push_back(l.to);
    ++indeg[l.to];
  }
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (indeg[i] == 0) stack.push_back(i);
  }
  std::size_t seen = 0;
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    ++seen;
    for (std::size_t w : adj[v]) {
      if (--indeg[w] == 0) stack.push_back(w);
    }
  }
  return seen == n;
}

std::string to_dot(const ExecutionGraph& graph) {
  std::ostringstream out;
  out << "digraph \"" << graph.session_id.hex() << "\" {\n";
  out << "  rankdir=LR;\n";
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const auto& e = graph.edges[i];
    out << "  e" << i << " [label=\"" << e.node << "\\n" << to_string(e.direction) << " "
        << rpc_hex(e.rpc_id) << "\\n" << e.first_byte.micros << ".." << e.last_byte.micros
        << "\"];\n";
  }
  for (const auto& l : graph.links) {
    out << "  e" << l.from << " -> e" << l.to << " [label=\"" << to_string(l.kind) << "\"];\n";
  }
  for (std::size_t idx : graph.non_causal) {
    out << "  e" << idx << " [style=dashed];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace tracekit
