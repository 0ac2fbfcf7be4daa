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

// Operator rules for root-cause analysis.
//
//   SYMPTOM <name>
//   PATHOLOGY <name> DEF <expr>
//   PROCEDURE <symptom> <funcname>
//
//   expr := expr OR expr | expr AND expr | NOT expr | ( expr ) | <symptom>
//
// One statement per line, '#' starts a comment. Keywords are
// case-sensitive. NOT binds tighter than AND, AND tighter than OR; binary
// operators associate to the left. Names are [A-Za-z_][A-Za-z0-9_]*.
// Symptoms may be referenced before they are declared.
//
// Evaluation is three-valued (Kleene): a symptom without a bound procedure,
// or whose procedure lacks data, is unknown. A pathology matches only when
// its expression is definitely true.

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tracekit/model.h"

namespace tracekit {

enum class Tri { kFalse, kTrue, kUnknown };

std::string_view to_string(Tri t);
Tri tri_not(Tri a);
Tri tri_and(Tri a, Tri b);
Tri tri_or(Tri a, Tri b);

struct Expr {
  enum class Kind { kSymptom, kNot, kAnd, kOr };
  Kind kind = Kind::kSymptom;
  std::string name;         // kSymptom
  std::vector<Expr> args;   // 1 for kNot, 2 for kAnd / kOr

  static Expr symptom(std::string n);
  static Expr negate(Expr e);
  static Expr conj(Expr l, Expr r);
  static Expr disj(Expr l, Expr r);

  bool operator==(const Expr&) const = default;
};

/// Minimal parentheses; reparsing yields an equal tree.
std::string to_string(const Expr& e);
Tri evaluate(const Expr& e, const std::map<std::string, Tri>& values);
std::size_t depth(const Expr& e);
void collect_symptoms(const Expr& e, std::vector<std::string>& out);

struct SymptomDecl {
  std::string name;
  std::optional<std::string> procedure;

  bool operator==(const SymptomDecl&) const = default;
};

struct Pathology {
  std::string name;
  Expr expr;

  bool operator==(const Pathology&) const = default;
};

struct RuleSet {
  std::vector<SymptomDecl> symptoms;    // declaration order
  std::vector<Pathology> pathologies;   // declaration order

  const SymptomDecl* symptom(const std::string& name) const;
  bool operator==(const RuleSet&) const = default;
};

/// Throws ParseError with 1-based line and column.
RuleSet parse_rules(std::string_view text);
RuleSet load_rules(const std::string& path);
/// Canonical text: symptoms, procedures, then pathologies.
std::string to_string(const RuleSet& rs);

struct PathologyResult {
  std::string name;
  Tri value = Tri::kUnknown;
};

/// Symptoms missing from `values` are unknown.
std::vector<PathologyResult> evaluate(const RuleSet& rs, const std::map<std::string, Tri>& values);
std::vector<std::string> matched(const std::vector<PathologyResult>& results);

using SymptomProcedure = std::function<Tri(const DiagnosisReport&)>;
using ProcedureRegistry = std::map<std::string, SymptomProcedure>;

/// high_rtt_variation, significant_queueing, cache_miss, high_retrans.
ProcedureRegistry builtin_procedures();

class BoundRuleSet {
 public:
  /// Throws BindingError naming every PROCEDURE absent from `registry`.
  BoundRuleSet(RuleSet rs, const ProcedureRegistry& registry);

  const RuleSet& rules() const { return rs_; }
  std::map<std::string, Tri> symptoms(const DiagnosisReport& report) const;
  std::vector<PathologyResult> evaluate(const DiagnosisReport& report) const;

 private:
  RuleSet rs_;
  std::map<std::string, SymptomProcedure> bound_;
};

}  // namespace tracekit
