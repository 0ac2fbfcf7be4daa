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

// Small builders shared by the unit tests.

#pragma once

#include <string>

#include "tracekit/model.h"

namespace testing_helpers {

inline tracekit::SessionId sid(std::uint64_t lo) { return {0, lo}; }

/// An edge observed at `node`, stamped on that node's clock.
inline tracekit::RpcEdgeRecord edge(tracekit::RpcId rpc, tracekit::RpcId parent, const std::string& node,
                                    tracekit::Direction d, std::int64_t f, std::int64_t l,
                                    tracekit::SessionId s = sid(1)) {
  tracekit::RpcEdgeRecord e;
  e.session_id = s;
  e.rpc_id = rpc;
  e.parent_rpc_id = parent;
  e.node = node;
  e.direction = d;
  e.first_byte = {f, node};
  e.last_byte = {l, node};
  return e;
}

/// All four edges of one rpc: caller sends at [ro_f, ro_f], callee receives
/// at ri, replies at so, caller receives at rc.
inline void rpc(tracekit::SessionTrace& t, tracekit::RpcId id, tracekit::RpcId parent, const std::string& caller,
                const std::string& callee, std::int64_t ro, std::int64_t ri, std::int64_t so, std::int64_t rc) {
  using tracekit::Direction;
  auto e1 = edge(id, parent, caller, Direction::kRequestOut, ro, ro, t.session_id);
  e1.peer = callee;
  auto e2 = edge(id, parent, callee, Direction::kRequestIn, ri, ri, t.session_id);
  e2.peer = caller;
  auto e3 = edge(id, parent, callee, Direction::kResponseOut, so, so, t.session_id);
  e3.peer = caller;
  auto e4 = edge(id, parent, caller, Direction::kResponseIn, rc, rc, t.session_id);
  e4.peer = callee;
  t.edges.insert(t.edges.end(), {e1, e2, e3, e4});
}

/// Root rpc served by `node`: request_in at `in`, response_out at `out`.
inline void root(tracekit::SessionTrace& t, tracekit::RpcId id, const std::string& node, std::int64_t in,
                 std::int64_t out) {
  using tracekit::Direction;
  auto a = edge(id, tracekit::kRootParent, node, Direction::kRequestIn, in, in, t.session_id);
  a.peer = "user";
  auto b = edge(id, tracekit::kRootParent, node, Direction::kResponseOut, out, out, t.session_id);
  b.peer = "user";
  t.edges.insert(t.edges.end(), {a, b});
}

}  // namespace testing_helpers
