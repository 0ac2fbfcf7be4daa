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

// Brute-force reference implementations. Deliberately naive: they share no
// code with the library beyond the data types.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tracekit/causality.h"
#include "tracekit/model.h"

namespace oracle {

/// Sort a copy, then linear interpolation between order statistics.
double quantile(std::vector<double> v, double p);

/// "high", "low", "normal" or "insufficient_data".
std::string fence(const std::vector<double>& history, double k, std::size_t min_samples, double x);

/// Longest causal walk by enumerating every walk. nullopt when the walk
/// graph has a cycle.
struct Walk {
  std::int64_t total = 0;
  std::vector<tracekit::PathSegment> segments;
};
std::optional<Walk> longest_walk(const tracekit::ExecutionGraph& g);

/// Kleene logic over a tiny AST. Values: 0 false, 1 true, 2 unknown.
struct Ast {
  enum Op { kVar, kNot, kAnd, kOr } op = kVar;
  int var = 0;
  std::vector<Ast> kids;
};
int eval(const Ast& a, const std::vector<int>& vars);
/// Fully parenthesized DSL text; variables are s0, s1, ...
std::string render(const Ast& a);

/// Window-minimum queueing delay by scanning every earlier sample.
std::optional<std::int64_t> queueing_delay(const std::vector<std::pair<std::int64_t, std::int64_t>>& samples,
                                           std::int64_t window_us, std::int64_t at_us, std::int64_t delta_us);

}  // namespace oracle
