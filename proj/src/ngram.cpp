// Copyright 2026 The hatlab Authors. All Rights Reserved.
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

#include "hat/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace hat {
namespace {

// Log10 value written for impossible events (the <s> unigram).
constexpr double kLog10Zero = -99.0;

double to_log10(double p) { return p > 0 ? std::log10(p) : kLog10Zero; }

}  // namespace

TokenId NGramModel::add_token(const std::string& token) {
  auto [it, inserted] = index_.emplace(token, static_cast<TokenId>(vocab_.size()));
  if (inserted) vocab_.push_back(token);
  if (token == kUnknown) unk_ = it->second;
  if (token == kSentenceEnd) end_ = it->second;
  return it->second;
}

TokenId NGramModel::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk_ : it->second;
}

bool NGramModel::contains(const std::string& token) const {
  return index_.count(token) > 0;
}

LmState NGramModel::start_state() const {
  LmState s;
  if (order() > 1 && contains(kSentenceStart)) s.context.push_back(start_id());
  return s;
}

double NGramModel::lookup_log10(const std::vector<TokenId>& history,
                                TokenId token) const {
  if (token < 0) return kLog10Zero;
  const int n = order();
  const std::size_t max_ctx = std::min<std::size_t>(history.size(), n - 1);
  double backoff = 0.0;
  for (std::size_t len = max_ctx + 1; len-- > 0;) {
    std::vector<TokenId> gram(history.end() - len, history.end());
    gram.push_back(token);
    const Table& t = tables_[len];
    if (auto it = t.find(gram); it != t.end()) return backoff + it->second.log10_prob;
    if (len > 0) {
      gram.pop_back();
      const Table& ctx = tables_[len - 1];
      if (auto c = ctx.find(gram); c != ctx.end()) backoff += c->second.log10_backoff;
    }
  }
  return kLog10Zero;
}

std::pair<double, LmState> NGramModel::score(const LmState& state,
                                             TokenId token) const {
  const double lp = lookup_log10(state.context, token);
  LmState next;
  if (order() > 1) {
    next.context = state.context;
    next.context.push_back(token);
    const std::size_t keep = order() - 1;
    if (next.context.size() > keep)
      next.context.erase(next.context.begin(), next.context.end() - keep);
  }
  return {lp <= kLog10Zero ? log_zero<double>() : lp * kLn10, next};
}

std::pair<double, LmState> NGramModel::score(const LmState& state,
                                             const std::string& token) const {
  return score(state, id(token));
}

double NGramModel::sentence_log_prob(const Sentence& words) const {
  LmState s = start_state();
  double total = 0.0;
  for (const auto& w : words) {
    auto [lp, next] = score(s, w);
    total += lp;
    s = std::move(next);
  }
  if (end_ >= 0) total += score(s, end_).first;
  return total;
}

std::vector<TokenId> NGramModel::predictable() const {
  std::vector<TokenId> out;
  for (TokenId i = 0; i < static_cast<TokenId>(vocab_.size()); ++i)
    if (vocab_[i] != kSentenceStart) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------

NGramModel train_ngram(const std::vector<Sentence>& corpus,
                       const NGramTrainOptions& opts) {
  if (corpus.empty()) throw ArgumentError("cannot train an n-gram model on an empty corpus");
  if (opts.order < 1 || opts.order > 4)
    throw ArgumentError("n-gram order must be in [1, 4]");
  if (!(opts.add_k > 0)) throw ArgumentError("add-k constant must be positive");

  NGramModel m;
  // Sorted vocabulary keeps ids independent of corpus order.
  std::set<std::string> words;
  for (const auto& s : corpus)
    for (const auto& w : s) words.insert(w);
  words.erase(kSentenceStart);
  words.erase(kSentenceEnd);
  words.erase(kUnknown);
  m.add_token(kSentenceStart);
  if (opts.sentence_end) m.add_token(kSentenceEnd);
  m.add_token(kUnknown);
  for (const auto& w : words) m.add_token(w);

  const int n = opts.order;
  const std::vector<TokenId> targets = m.predictable();
  const double V = static_cast<double>(targets.size());
  const double k = opts.add_k;

  // counts[len][history] -> token -> count, for history length len.
  std::vector<std::map<std::vector<TokenId>, std::map<TokenId, double>>> counts(n);
  for (const auto& s : corpus) {
    std::vector<TokenId> toks{m.start_id()};
    for (const auto& w : s) toks.push_back(m.id(w));
    if (opts.sentence_end) toks.push_back(m.end_id());
    for (std::size_t i = 1; i < toks.size(); ++i)
      for (int len = 0; len < n && static_cast<std::size_t>(len) <= i; ++len) {
        std::vector<TokenId> hist(toks.begin() + (i - len), toks.begin() + i);
        counts[len][hist][toks[i]] += 1.0;
      }
  }

  m.tables_.assign(n, {});
  // Unigrams: add-k over every predictable token.
  {
    const auto& c = counts[0][{}];
    double total = 0.0;
    for (const auto& [tok, cnt] : c) total += cnt;
    for (TokenId w : targets) {
      auto it = c.find(w);
      const double cnt = it == c.end() ? 0.0 : it->second;
      m.tables_[0][{w}].log10_prob = to_log10((cnt + k) / (total + k * V));
    }
    m.tables_[0][{m.start_id()}].log10_prob = kLog10Zero;
  }
  // Higher orders: add-k for observed continuations, the rest backs off.
  for (int len = 1; len < n; ++len) {
    for (const auto& [hist, conts] : counts[len]) {
      double total = 0.0;
      for (const auto& [tok, cnt] : conts) total += cnt;
      double seen_mass = 0.0, seen_lower = 0.0;
      const std::vector<TokenId> lower_hist(hist.begin() + 1, hist.end());
      for (const auto& [tok, cnt] : conts) {
        const double p = (cnt + k) / (total + k * V);
        seen_mass += p;
        seen_lower += std::pow(10.0, m.lookup_log10(lower_hist, tok));
        std::vector<TokenId> gram = hist;
        gram.push_back(tok);
        m.tables_[len][gram].log10_prob = to_log10(p);
      }
      auto& ctx = m.tables_[len - 1][hist];
      const double left = 1.0 - seen_mass, left_lower = 1.0 - seen_lower;
      ctx.has_backoff = true;
      ctx.log10_backoff =
          (left > 1e-15 && left_lower > 1e-15) ? std::log10(left / left_lower) : 0.0;
    }
  }
  return m;
}

NGramModel uniform_ngram(const std::vector<std::string>& tokens) {
  NGramModel m;
  m.add_token(kSentenceStart);
  m.add_token(kSentenceEnd);
  for (const auto& t : tokens) m.add_token(t);
  m.tables_.assign(1, {});
  const auto targets = m.predictable();
  for (TokenId w : targets)
    m.tables_[0][{w}].log10_prob = -std::log10(static_cast<double>(targets.size()));
  m.tables_[0][{m.start_id()}].log10_prob = kLog10Zero;
  return m;
}

// ARPA ---------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw ParseError("ARPA line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) parse_fail(line, "bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    parse_fail(line, "bad number '" + s + "'");
  }
}

}  // namespace

NGramModel load_arpa(std::istream& in) {
  NGramModel m;
  std::string raw;
  int line_no = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, raw)) {
      ++line_no;
      out = trim(raw);
      if (!out.empty()) return true;
    }
    return false;
  };

  std::string line;
  bool found = false;
  while (next_line(line))
    if (line == "\\data\\") {
      found = true;
      break;
    }
  if (!found) parse_fail(line_no, "missing \\data\\ header");

  std::vector<std::size_t> declared;
  std::vector<std::vector<std::string>> raw_tokens;
  while (next_line(line)) {
    if (line.rfind("ngram ", 0) != 0) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_fail(line_no, "malformed count line");
    const int k = static_cast<int>(parse_double(trim(line.substr(6, eq - 6)), line_no));
    const long long cnt = static_cast<long long>(parse_double(trim(line.substr(eq + 1)), line_no));
    if (k != static_cast<int>(declared.size()) + 1)
      parse_fail(line_no, "ngram orders must be listed in sequence");
    if (cnt < 0) parse_fail(line_no, "negative ngram count");
    declared.push_back(static_cast<std::size_t>(cnt));
  }
  if (declared.empty()) parse_fail(line_no, "no ngram counts in \\data\\ section");
  m.tables_.assign(declared.size(), {});

  struct Pending {
    int order;
    std::vector<std::string> words;
    NGramModel::Entry entry;
  };
  std::vector<Pending> pending;
  int expected_order = 1;
  bool ended = false;
  // `line` holds the first non-count line.
  while (true) {
    if (line == "\\end\\") {
      ended = true;
      break;
    }
    const std::string header = "\\" + std::to_string(expected_order) + "-grams:";
    if (line != header)
      parse_fail(line_no, "expected section " + header + ", found '" + line + "'");
    std::size_t seen = 0;
    bool more = false;
    while ((more = next_line(line))) {
      if (line[0] == '\\') break;
      std::istringstream fields(line);
      std::string tok;
      std::vector<std::string> parts;
      while (fields >> tok) parts.push_back(tok);
      const std::size_t k = static_cast<std::size_t>(expected_order);
      if (parts.size() != k + 1 && parts.size() != k + 2)
        parse_fail(line_no, "expected " + std::to_string(k) + " tokens");
      Pending p{expected_order, {parts.begin() + 1, parts.begin() + 1 + k}, {}};
      p.entry.log10_prob = parse_double(parts[0], line_no);
      if (parts.size() == k + 2) {
        p.entry.has_backoff = true;
        p.entry.log10_backoff = parse_double(parts[k + 1], line_no);
      }
      pending.push_back(std::move(p));
      ++seen;
    }
    if (seen != declared[expected_order - 1])
      parse_fail(line_no, "section " + header + " has " + std::to_string(seen) +
                              " entries, header declares " +
                              std::to_string(declared[expected_order - 1]));
    if (!more) break;
    ++expected_order;
    if (expected_order > static_cast<int>(declared.size()) && line != "\\end\\")
      parse_fail(line_no, "unexpected section '" + line + "'");
  }
  if (!ended) parse_fail(line_no, "missing \\end\\ marker");
  if (expected_order != static_cast<int>(declared.size()) + 1)
    parse_fail(line_no, "missing ngram sections");

  // Unigrams define the vocabulary, in file order.
  for (const auto& p : pending)
    if (p.order == 1) m.add_token(p.words[0]);
  for (const auto& p : pending) {
    std::vector<TokenId> gram;
    for (const auto& w : p.words) {
      if (!m.contains(w)) parse_fail(line_no, "token '" + w + "' missing from unigrams");
      gram.push_back(m.id(w));
    }
    m.tables_[p.order - 1][gram] = p.entry;
  }
  return m;
}

NGramModel load_arpa_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open ARPA file " + path);
  return load_arpa(in);
}

void save_arpa(std::ostream& out, const NGramModel& model) {
  out << "\n\\data\\\n";
  for (int k = 1; k <= model.order(); ++k)
    out << "ngram " << k << "=" << model.table(k).size() << "\n";
  char buf[64];
  for (int k = 1; k <= model.order(); ++k) {
    out << "\n\\" << k << "-grams:\n";
    for (const auto& [gram, e] : model.table(k)) {
      std::snprintf(buf, sizeof buf, "%.10g", e.log10_prob);
      out << buf << '\t';
      for (std::size_t i = 0; i < gram.size(); ++i)
        out << (i ? " " : "") << model.token(gram[i]);
      if (e.has_backoff && k < model.order()) {
        std::snprintf(buf, sizeof buf, "%.10g", e.log10_backoff);
        out << '\t' << buf;
      }
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

void save_arpa_file(const std::string& path, const NGramModel& model) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write ARPA file " + path);
  save_arpa(out, model);
}

double perplexity(const NGramModel& model, const std::vector<Sentence>& corpus) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& s : corpus) {
    total += model.sentence_log_prob(s);
    n += s.size() + (model.end_id() >= 0 ? 1 : 0);
  }
  if (n == 0) throw ArgumentError("perplexity of an empty corpus");
  return std::exp(-total / static_cast<double>(n));
}

std::vector<Sentence> read_corpus(std::istream& in) {
  std::vector<Sentence> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    Sentence s;
    std::string w;
    while (ss >> w) s.push_back(w);
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sentence> read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus " + path);
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<Sentence>& corpus) {
  for (const auto& s : corpus) {
    for (std::size_t i = 0; i < s.size(); ++i) out << (i ? " " : "") << s[i];
    out << '\n';
  }
}

}  // namespace hat
