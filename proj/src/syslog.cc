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

#include "tracekit/syslog.h"

#include <array>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>

#include "tracekit/codec.h"
#include "tracekit/errors.h"

namespace tracekit {
namespace {

constexpr std::array<std::string_view, 12> kMonths = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  void skip_spaces() {
    while (peek() == ' ') ++pos_;
  }
  int number(std::size_t min_digits, std::size_t max_digits, std::size_t* ndigits = nullptr) {
    std::size_t start = pos_;
    int v = 0;
    while (pos_ - start < max_digits && peek() >= '0' && peek() <= '9') v = v * 10 + (s_[pos_++] - '0');
    if (pos_ - start < min_digits) fail("expected a number");
    if (ndigits) *ndigits = pos_ - start;
    return v;
  }
  std::string_view word() {
    std::size_t start = pos_;
    while (!done() && peek() != ' ') ++pos_;
    if (pos_ == start) fail("expected a token");
    return s_.substr(start, pos_ - start);
  }
  std::string_view rest() const { return s_.substr(std::min(pos_, s_.size())); }

  [[noreturn]] void fail(const std::string& what) const {
    throw DecodeError("syslog: " + what + " at offset " + std::to_string(pos_), pos_);
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

SyslogMessage parse_syslog_line(std::string_view line, int year) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  Cursor c(line);
  c.expect('<');
  int pri = c.number(1, 3);
  if (pri > 191) c.fail("priority out of range");
  c.expect('>');

  std::string_view mon = c.word();
  unsigned month = 0;
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (kMonths[i] == mon) month = static_cast<unsigned>(i + 1);
  }
  if (month == 0) c.fail("unknown month");
  c.skip_spaces();
  int day = c.number(1, 2);
  c.expect(' ');
  int hh = c.number(2, 2);
  c.expect(':');
  int mm = c.number(2, 2);
  c.expect(':');
  int ss = c.number(2, 2);
  std::int64_t frac_us = 0;
  if (c.peek() == '.') {
    c.expect('.');
    std::size_t nd = 0;
    int frac = c.number(1, 6, &nd);
    frac_us = frac;
    for (std::size_t i = nd; i < 6; ++i) frac_us *= 10;
  }
  if (hh > 23 || mm > 59 || ss > 60) c.fail("time out of range");
  std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                  std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) c.fail("invalid date");
  c.expect(' ');
  std::string_view host = c.word();
  c.expect(' ');

  SyslogMessage m;
  m.device = std::string(host);
  m.severity = pri % 8;
  m.raw = std::string(c.rest());
  const auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
  m.at.micros = ((static_cast<std::int64_t>(days) * 24 + hh) * 60 + mm) * 60'000'000LL +
                ss * 1'000'000LL + frac_us;
  m.at.clock_id = std::string(kWallClock);
  return m;
}

std::string format_syslog_line(const SyslogMessage& msg) {
  using namespace std::chrono;
  const sys_time<microseconds> tp{microseconds{msg.at.micros}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  hh_mm_ss<microseconds> tod{tp - day};
  char buf[64];
  std::snprintf(buf, sizeof buf, "<%d>%s %2u %02d:%02d:%02d.%06lld ", 184 + (msg.severity & 7),
                std::string(kMonths[static_cast<unsigned>(ymd.month()) - 1]).c_str(),
                static_cast<unsigned>(ymd.day()), static_cast<int>(tod.hours().count()),
                static_cast<int>(tod.minutes().count()), static_cast<int>(tod.seconds().count()),
                static_cast<long long>(tod.subseconds().count()));
  return buf + msg.device + " " + msg.raw;
}

std::string required_literal(std::string_view p) {
  std::string best;
  std::string cur;
  int depth = 0;
  auto flush = [&] {
    if (cur.size() > best.size()) best = cur;
    cur.clear();
  };
  for (std::size_t i = 0; i < p.size(); ++i) {
    char ch = p[i];
    if (ch == '\\') {
      // Escaped punctuation is literal; class escapes (\d, \S, ...) are not.
      if (i + 1 < p.size() && !std::isalnum(static_cast<unsigned char>(p[i + 1])) && depth == 0) {
        cur.push_back(p[++i]);
      } else {
        flush();
        ++i;
      }
      continue;
    }
    if (ch == '|' && depth == 0) return "";
    if (ch == '(') {
      flush();
      ++depth;
      continue;
    }
    if (ch == ')') {
      --depth;
      continue;
    }
    if (ch == '[') {
      flush();
      while (i < p.size() && p[i] != ']') i += (p[i] == '\\') ? 2 : 1;
      continue;
    }
    if (ch == '*' || ch == '?' || ch == '{') {
      // The preceding atom is optional or repeated; drop it from the run.
      if (!cur.empty()) cur.pop_back();
      flush();
      if (ch == '{') {
        while (i < p.size() && p[i] != '}') ++i;
      }
      continue;
    }
    if (ch == '+') {
      flush();
      continue;
    }
    if (ch == '.' || ch == '^' || ch == '$') {
      flush();
      continue;
    }
    if (depth == 0) {
      cur.push_back(ch);
    } else {
      flush();
    }
  }
  flush();
  return best;
}

TemplateCorpus::TemplateCorpus(std::vector<Template> templates) : templates_(std::move(templates)) {
  std::set<std::string> ids;
  for (const auto& t : templates_) {
    if (t.template_id.empty()) throw CorpusError("template with empty id");
    if (!ids.insert(t.template_id).second) throw CorpusError("duplicate template id " + t.template_id);
    try {
      std::regex re(t.pattern, std::regex::ECMAScript | std::regex::optimize);
      if (re.mark_count() != t.captures.size()) {
        throw CorpusError("template " + t.template_id + " has " + std::to_string(re.mark_count()) +
                          " groups but " + std::to_string(t.captures.size()) + " capture names");
      }
      compiled_.push_back({std::move(re), required_literal(t.pattern)});
    } catch (const std::regex_error& e) {
      throw CorpusError("template " + t.template_id + ": bad pattern: " + e.what());
    }
  }
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    for (const auto& ex : templates_[i].examples) {
      std::vector<std::string> hits;
      for (std::size_t j = 0; j < templates_.size(); ++j) {
        if (std::regex_match(ex, compiled_[j].re)) hits.push_back(templates_[j].template_id);
      }
      if (hits.empty() || hits.front() != templates_[i].template_id || hits.size() > 1) {
        std::string list;
        for (const auto& h : hits) list += (list.empty() ? "" : ", ") + h;
        throw CorpusError("example \"" + ex + "\" of " + templates_[i].template_id +
                          " matches [" + list + "]; templates must be mutually exclusive");
      }
    }
  }
}

TemplateCorpus TemplateCorpus::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw CorpusError("cannot read template corpus " + file.string());
  std::vector<Template> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(from_jsonl<Template>(line));
    } catch (const DecodeError& e) {
      throw CorpusError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return TemplateCorpus(std::move(out));
}

const Template* TemplateCorpus::find(const std::string& id) const {
  for (const auto& t : templates_) {
    if (t.template_id == id) return &t;
  }
  return nullptr;
}

std::optional<std::size_t> TemplateCorpus::first_match(const std::string& body, std::smatch* m) const {
  for (std::size_t i = 0; i < compiled_.size(); ++i) {
    const auto& c = compiled_[i];
    if (!c.literal.empty() && body.find(c.literal) == std::string::npos) continue;
    if (std::regex_match(body, *m, c.re)) return i;
  }
  return std::nullopt;
}

bool TemplateCorpus::match(SyslogMessage& msg) const {
  std::smatch m;
  auto idx = first_match(msg.raw, &m);
  if (!idx) return false;
  const Template& t = templates_[*idx];
  msg.template_id = t.template_id;
  msg.attrs.clear();
  for (std::size_t g = 0; g < t.captures.size(); ++g) {
    if (m[g + 1].matched) msg.attrs[t.captures[g]] = m[g + 1].str();
  }
  return true;
}

}  // namespace tracekit
