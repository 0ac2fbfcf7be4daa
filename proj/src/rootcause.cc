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

#include "tracekit/rootcause.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "tracekit/errors.h"

namespace tracekit {

std::string_view to_string(Tri t) {
  switch (t) {
    case Tri::kFalse: return "false";
    case Tri::kTrue: return "true";
    case Tri::kUnknown: return "unknown";
  }
  return "unknown";
}

Tri tri_not(Tri a) {
  if (a == Tri::kUnknown) return a;
  return a == Tri::kTrue ? Tri::kFalse : Tri::kTrue;
}

Tri tri_and(Tri a, Tri b) {
  if (a == Tri::kFalse || b == Tri::kFalse) return Tri::kFalse;
  if (a == Tri::kTrue && b == Tri::kTrue) return Tri::kTrue;
  return Tri::kUnknown;
}

Tri tri_or(Tri a, Tri b) {
  if (a == Tri::kTrue || b == Tri::kTrue) return Tri::kTrue;
  if (a == Tri::kFalse && b == Tri::kFalse) return Tri::kFalse;
  return Tri::kUnknown;
}

Expr Expr::symptom(std::string n) { return Expr{Kind::kSymptom, std::move(n), {}}; }
Expr Expr::negate(Expr e) { return Expr{Kind::kNot, "", {std::move(e)}}; }
Expr Expr::conj(Expr l, Expr r) { return Expr{Kind::kAnd, "", {std::move(l), std::move(r)}}; }
Expr Expr::disj(Expr l, Expr r) { return Expr{Kind::kOr, "", {std::move(l), std::move(r)}}; }

namespace {

int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::kOr: return 1;
    case Expr::Kind::kAnd: return 2;
    case Expr::Kind::kNot: return 3;
    case Expr::Kind::kSymptom: return 4;
  }
  return 0;
}

void print(const Expr& e, std::string& out) {
  auto child = [&](const Expr& c, bool wrap) {
    if (wrap) out += "( ";
    print(c, out);
    if (wrap) out += " )";
  };
  switch (e.kind) {
    case Expr::Kind::kSymptom:
      out += e.name;
      break;
    case Expr::Kind::kNot:
      out += "NOT ";
      child(e.args[0], precedence(e.args[0]) < precedence(e));
      break;
    case Expr::Kind::kAnd:
    case Expr::Kind::kOr: {
      const int p = precedence(e);
      // Left-associative: an equal-precedence right operand needs parens.
      child(e.args[0], precedence(e.args[0]) < p);
      out += e.kind == Expr::Kind::kAnd ? " AND " : " OR ";
      child(e.args[1], precedence(e.args[1]) <= p);
      break;
    }
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

Tri evaluate(const Expr& e, const std::map<std::string, Tri>& values) {
  switch (e.kind) {
    case Expr::Kind::kSymptom: {
      auto it = values.find(e.name);
      return it == values.end() ? Tri::kUnknown : it->second;
    }
    case Expr::Kind::kNot: return tri_not(evaluate(e.args[0], values));
    case Expr::Kind::kAnd: return tri_and(evaluate(e.args[0], values), evaluate(e.args[1], values));
    case Expr::Kind::kOr: return tri_or(evaluate(e.args[0], values), evaluate(e.args[1], values));
  }
  return Tri::kUnknown;
}

std::size_t depth(const Expr& e) {
  std::size_t d = 0;
  for (const auto& a : e.args) d = std::max(d, depth(a));
  return d + 1;
}

void collect_symptoms(const Expr& e, std::vector<std::string>& out) {
  if (e.kind == Expr::Kind::kSymptom) out.push_back(e.name);
  for (const auto& a : e.args) collect_symptoms(a, out);
}

const SymptomDecl* RuleSet::symptom(const std::string& name) const {
  for (const auto& s : symptoms) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

namespace {

enum class Tok { kIdent, kSymptom, kPathology, kDef, kProcedure, kAnd, kOr, kNot, kLParen, kRParen, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  int col = 1;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> lex(std::string_view line, int lineno) {
  static const std::map<std::string, Tok, std::less<>> kKeywords = {
      {"SYMPTOM", Tok::kSymptom}, {"PATHOLOGY", Tok::kPathology}, {"DEF", Tok::kDef},
      {"PROCEDURE", Tok::kProcedure}, {"AND", Tok::kAnd}, {"OR", Tok::kOr}, {"NOT", Tok::kNot}};
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    const int col = static_cast<int>(i) + 1;
    if (c == '#') break;
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '(') {
      out.push_back({Tok::kLParen, "(", col});
      ++i;
    } else if (c == ')') {
      out.push_back({Tok::kRParen, ")", col});
      ++i;
    } else if (ident_start(c)) {
      std::size_t j = i;
      while (j < line.size() && ident_char(line[j])) ++j;
      std::string word(line.substr(i, j - i));
      auto kw = kKeywords.find(word);
      out.push_back({kw == kKeywords.end() ? Tok::kIdent : kw->second, word, col});
      i = j;
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", lineno, col);
    }
  }
  out.push_back({Tok::kEnd, "", static_cast<int>(line.size()) + 1});
  return out;
}

std::string describe(const Token& t) {
  return t.kind == Tok::kEnd ? std::string("end of line") : "'" + t.text + "'";
}

struct Ref {
  std::string name;
  int line;
  int col;
};

class LineParser {
 public:
  LineParser(std::vector<Token> toks, int lineno) : toks_(std::move(toks)), line_(lineno) {}

  const Token& peek() const { return toks_[pos_]; }
  Token next() { return toks_[pos_ == toks_.size() - 1 ? pos_ : pos_++]; }

  Token expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(std::string("expected ") + what + ", got " + describe(peek()));
    return next();
  }
  void expect_end() {
    if (peek().kind == Tok::kRParen) fail("unbalanced parenthesis: unexpected ')'");
    if (peek().kind != Tok::kEnd) fail("unexpected " + describe(peek()) + " after statement");
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, peek().col); }

  Expr parse_or(std::vector<Ref>& refs) {
    Expr e = parse_and(refs);
    while (peek().kind == Tok::kOr) {
      next();
      e = Expr::disj(std::move(e), parse_and(refs));
    }
    return e;
  }

 private:
  Expr parse_and(std::vector<Ref>& refs) {
    Expr e = parse_unary(refs);
    while (peek().kind == Tok::kAnd) {
      next();
      e = Expr::conj(std::move(e), parse_unary(refs));
    }
    return e;
  }

  Expr parse_unary(std::vector<Ref>& refs) {
    if (peek().kind == Tok::kNot) {
      next();
      return Expr::negate(parse_unary(refs));
    }
    if (peek().kind == Tok::kLParen) {
      const int open_col = peek().col;
      next();
      Expr e = parse_or(refs);
      if (peek().kind != Tok::kRParen) {
        if (peek().kind == Tok::kEnd) {
          throw ParseError("unbalanced parenthesis: '(' at column " + std::to_string(open_col) +
                               " is never closed",
                           line_, peek().col);
        }
        fail("expected ')' or operator, got " + describe(peek()));
      }
      next();
      return e;
    }
    if (peek().kind == Tok::kIdent) {
      Token t = next();
      refs.push_back({t.text, line_, t.col});
      return Expr::symptom(t.text);
    }
    if (peek().kind == Tok::kRParen) fail("unbalanced parenthesis: unexpected ')'");
    fail("expected a symptom, NOT or '(', got " + describe(peek()));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int line_;
};

}  // namespace

RuleSet parse_rules(std::string_view text) {
  RuleSet rs;
  std::map<std::string, int> declared;  // name -> line, symptoms and pathologies
  std::set<std::string> pathology_names;
  std::vector<Ref> refs;
  std::vector<std::pair<Ref, std::string>> procedures;

  int lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++lineno;
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

    LineParser p(lex(line, lineno), lineno);
    const Token head = p.next();
    switch (head.kind) {
      case Tok::kEnd:
        continue;
      case Tok::kSymptom: {
        Token name = p.expect(Tok::kIdent, "a symptom name");
        p.expect_end();
        if (declared.count(name.text)) {
          throw ParseError("duplicate declaration of '" + name.text + "' (first on line " +
                               std::to_string(declared[name.text]) + ")",
                           lineno, name.col);
        }
        declared[name.text] = lineno;
        rs.symptoms.push_back({name.text, std::nullopt});
        break;
      }
      case Tok::kPathology: {
        Token name = p.expect(Tok::kIdent, "a pathology name");
        p.expect(Tok::kDef, "DEF");
        if (declared.count(name.text)) {
          throw ParseError("duplicate declaration of '" + name.text + "' (first on line " +
                               std::to_string(declared[name.text]) + ")",
                           lineno, name.col);
        }
        Expr e = p.parse_or(refs);
        p.expect_end();
        declared[name.text] = lineno;
        pathology_names.insert(name.text);
        rs.pathologies.push_back({name.text, std::move(e)});
        break;
      }
      case Tok::kProcedure: {
        Token sym = p.expect(Tok::kIdent, "a symptom name");
        Token fn = p.expect(Tok::kIdent, "a procedure name");
        p.expect_end();
        procedures.push_back({{sym.text, lineno, sym.col}, fn.text});
        break;
      }
      default:
        throw ParseError("expected SYMPTOM, PATHOLOGY or PROCEDURE, got " + describe(head), lineno, head.col);
    }
  }

  auto is_symptom = [&](const std::string& n) { return declared.count(n) && !pathology_names.count(n); };
  for (const auto& r : refs) {
    if (pathology_names.count(r.name)) {
      throw ParseError("'" + r.name + "' is a pathology, not a symptom", r.line, r.col);
    }
    if (!is_symptom(r.name)) throw ParseError("undeclared symptom '" + r.name + "'", r.line, r.col);
  }
  for (const auto& [ref, fn] : procedures) {
    if (!is_symptom(ref.name)) {
      throw ParseError("PROCEDURE for undeclared symptom '" + ref.name + "'", ref.line, ref.col);
    }
    for (auto& s : rs.symptoms) {
      if (s.name != ref.name) continue;
      if (s.procedure) {
        throw ParseError("duplicate PROCEDURE for symptom '" + ref.name + "'", ref.line, ref.col);
      }
      s.procedure = fn;
    }
  }
  return rs;
}

RuleSet load_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot read rules file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rules(ss.str());
}

std::string to_string(const RuleSet& rs) {
  std::string out;
  for (const auto& s : rs.symptoms) out += "SYMPTOM " + s.name + "\n";
  for (const auto& s : rs.symptoms) {
    if (s.procedure) out += "PROCEDURE " + s.name + " " + *s.procedure + "\n";
  }
  for (const auto& p : rs.pathologies) out += "PATHOLOGY " + p.name + " DEF " + to_string(p.expr) + "\n";
  return out;
}

std::vector<PathologyResult> evaluate(const RuleSet& rs, const std::map<std::string, Tri>& values) {
  std::vector<PathologyResult> out;
  for (const auto& p : rs.pathologies) out.push_back({p.name, evaluate(p.expr, values)});
  return out;
}

std::vector<std::string> matched(const std::vector<PathologyResult>& results) {
  std::vector<std::string> out;
  for (const auto& r : results) {
    if (r.value == Tri::kTrue) out.push_back(r.name);
  }
  return out;
}

ProcedureRegistry builtin_procedures() {
  ProcedureRegistry r;
  r["high_rtt_variation"] = [](const DiagnosisReport& rep) {
    if (rep.internet_findings.empty()) return Tri::kUnknown;
    for (const auto& f : rep.internet_findings) {
      if (f.rtt_variation >= 0.5) return Tri::kTrue;
    }
    return Tri::kFalse;
  };
  r["significant_queueing"] = [](const DiagnosisReport& rep) {
    bool measured = false;
    for (const auto& f : rep.network_findings) {
      if (f.flagged) return Tri::kTrue;
      measured = measured || f.queueing_delay_us.has_value();
    }
    return measured ? Tri::kFalse : Tri::kUnknown;
  };
  r["cache_miss"] = [](const DiagnosisReport& rep) {
    if (rep.internet_findings.empty()) return Tri::kUnknown;
    for (const auto& f : rep.internet_findings) {
      if (!f.cache_hit) return Tri::kTrue;
    }
    return Tri::kFalse;
  };
  r["high_retrans"] = [](const DiagnosisReport& rep) {
    if (rep.internet_findings.empty()) return Tri::kUnknown;
    for (const auto& f : rep.internet_findings) {
      if (f.retrans_segments > 0) return Tri::kTrue;
    }
    return Tri::kFalse;
  };
  return r;
}

BoundRuleSet::BoundRuleSet(RuleSet rs, const ProcedureRegistry& registry) : rs_(std::move(rs)) {
  std::vector<std::string> missing;
  for (const auto& s : rs_.symptoms) {
    if (!s.procedure) continue;
    auto it = registry.find(*s.procedure);
    if (it == registry.end()) {
      missing.push_back(*s.procedure);
    } else {
      bound_[s.name] = it->second;
    }
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    throw BindingError(missing);
  }
}

std::map<std::string, Tri> BoundRuleSet::symptoms(const DiagnosisReport& report) const {
  std::map<std::string, Tri> out;
  for (const auto& s : rs_.symptoms) {
    auto it = bound_.find(s.name);
    out[s.name] = it == bound_.end() ? Tri::kUnknown : it->second(report);
  }
  return out;
}

std::vector<PathologyResult> BoundRuleSet::evaluate(const DiagnosisReport& report) const {
  return tracekit::evaluate(rs_, symptoms(report));
}

}  // namespace tracekit
