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

// Backoff n-gram language model with ARPA I/O.
//
// Scores are natural-log internally; ARPA files carry log10 values and are
// converted with kLn10 on the way in and out.

#pragma once

#include "hat/core.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hat {

inline constexpr double kLn10 = 2.302585092994045684;
inline const std::string kSentenceStart = "<s>";
inline const std::string kSentenceEnd = "</s>";
inline const std::string kUnknown = "<unk>";

using TokenId = int;
using Sentence = std::vector<std::string>;

struct LmState {
  std::vector<TokenId> context;  // at most order-1 most recent tokens
  friend auto operator<=>(const LmState&, const LmState&) = default;
};

struct NGramTrainOptions {
  int order = 3;
  double add_k = 0.1;
  bool sentence_end = true;  // predict </s> at the end of every sentence
};

class NGramModel {
 public:
  struct Entry {
    double log10_prob = 0.0;
    double log10_backoff = 0.0;
    bool has_backoff = false;
  };
  using Table = std::map<std::vector<TokenId>, Entry>;

  NGramModel() = default;

  int order() const { return static_cast<int>(tables_.size()); }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  const std::string& token(TokenId id) const { return vocab_.at(id); }
  /// Unknown strings map to <unk> (or -1 when the model has none).
  TokenId id(const std::string& token) const;
  bool contains(const std::string& token) const;
  TokenId start_id() const { return id(kSentenceStart); }
  TokenId end_id() const { return end_; }

  /// Order-k entries (k is 1-based).
  const Table& table(int k) const { return tables_.at(k - 1); }

  LmState start_state() const;
  /// Natural-log P(token | state) by standard backoff, and the next state.
  std::pair<double, LmState> score(const LmState& state, TokenId token) const;
  std::pair<double, LmState> score(const LmState& state,
                                   const std::string& token) const;

  /// Natural-log probability of a whole sentence including </s> when the
  /// model predicts it.
  double sentence_log_prob(const Sentence& words) const;
  /// Tokens that may be predicted: everything except <s>.
  std::vector<TokenId> predictable() const;

  friend NGramModel train_ngram(const std::vector<Sentence>& corpus,
                                const NGramTrainOptions& opts);
  friend NGramModel load_arpa(std::istream& in);
  friend NGramModel uniform_ngram(const std::vector<std::string>& tokens);

 private:
  TokenId add_token(const std::string& token);
  double lookup_log10(const std::vector<TokenId>& history, TokenId token) const;

  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> index_;
  std::vector<Table> tables_;
  TokenId unk_ = -1;
  TokenId end_ = -1;
};

NGramModel train_ngram(const std::vector<Sentence>& corpus,
                       const NGramTrainOptions& opts = {});
/// Unigram model giving every token (plus </s>) equal probability.
NGramModel uniform_ngram(const std::vector<std::string>& tokens);

NGramModel load_arpa(std::istream& in);
NGramModel load_arpa_file(const std::string& path);
void save_arpa(std::ostream& out, const NGramModel& model);
void save_arpa_file(const std::string& path, const NGramModel& model);

/// exp(-mean natural-log probability) over every predicted token.
double perplexity(const NGramModel& model, const std::vector<Sentence>& corpus);

/// One whitespace-tokenized sentence per line; blank lines are skipped.
std::vector<Sentence> read_corpus(std::istream& in);
std::vector<Sentence> read_corpus_file(const std::string& path);
void write_corpus(std::ostream& out, const std::vector<Sentence>& corpus);

}  // namespace hat
