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

// Frame-synchronous beam search.
//
// HAT search maximizes
//
//   lambda1 * log P(y|x) - lambda2 * log P_ILM(y) + log P_LM(y)
//
// and fused CTC/RNNT search maximizes
//
//   lambda1 * log P'(y|x) + log P_LM(y) + coverage * |y|
//
// where P' scales every blank probability by blank_scale and renormalizes.
// Hypotheses with the same blank-free history are recombined; the
// posterior term is merged by log-sum-exp (or max), the ILM and LM terms
// are functions of the history and therefore already equal.

#pragma once

#include "hat/core.hpp"
#include "hat/network.hpp"
#include "hat/ngram.hpp"
#include "hat/posterior.hpp"

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace hat {

enum class LmMode { kLabel, kWord };
enum class MergeMode { kLogSumExp, kMax };

struct DecodeConfig {
  double lambda1 = 2.5;
  double lambda2 = 0.95;
  int beam_width = 8;
  int max_labels_per_frame = 5;
  int max_output_labels = 0;  // 0 leaves the output length unbounded
  LmMode mode = LmMode::kLabel;
  int nbest = 10;
  MergeMode merge = MergeMode::kLogSumExp;
  double blank_scale = 1.0;  // fused decoding only
  double coverage = 0.0;     // fused decoding only

  void validate() const;
};

/// Pronunciation prefix tree. Node 0 is the root.
class LexiconTrie {
 public:
  struct Node {
    std::map<Symbol, int> children;
    std::vector<int> words;  // words whose pronunciation ends here
  };

  LexiconTrie();
  int add_word(const std::string& word, const LabelSeq& pronunciation);

  const Node& node(int id) const { return nodes_.at(id); }
  int child(int node, Symbol label) const;  // -1 when absent
  int num_words() const { return static_cast<int>(words_.size()); }
  const std::string& word(int id) const { return words_.at(id); }
  const LabelSeq& pronunciation(int id) const { return prons_.at(id); }
  /// Word id by spelling, -1 when unknown.
  int find_word(const std::string& word) const;

 private:
  std::vector<Node> nodes_;
  std::vector<std::string> words_;
  std::vector<LabelSeq> prons_;
  std::map<std::string, int> word_index_;
};

/// Maps decoder units (labels or words) to LM token ids. Without a model the
/// LM contributes nothing.
struct LmBinding {
  const NGramModel* model = nullptr;
  std::vector<TokenId> tokens;

  static LmBinding none() { return {}; }
  static LmBinding for_labels(const NGramModel& model,
                              const std::vector<std::string>& label_names);
  static LmBinding for_words(const NGramModel& model, const LexiconTrie& lexicon);
};

struct Hypothesis {
  LabelSeq labels;
  std::vector<int> words;
  int frame = 1;
  double score_posterior = 0.0;
  double score_ilm = 0.0;
  double score_lm = 0.0;
  int lex_node = 0;

  // Search state.
  DecoderState dec;
  LmState lm;
  Vector ilm_log;  // log P_ILM(. | labels)
  int emitted_this_frame = 0;
  double blank_prob_log = 0.0;  // CTC prefix search: ends in blank
  double label_prob_log = 0.0;  // CTC prefix search: ends in a label

  /// lambda1 * posterior - lambda2 * ilm + lm + coverage * |labels|.
  double combined(const DecodeConfig& cfg, GridKind kind) const;
};

/// Ordering used everywhere: higher combined score first, then the
/// lexicographically smaller label sequence, then word sequence.
bool better(const Hypothesis& a, const Hypothesis& b, const DecodeConfig& cfg,
            GridKind kind);

std::vector<Hypothesis> beam_decode_hat(const Matrix& features,
                                        const ModelParams& params,
                                        const LmBinding& lm,
                                        const LexiconTrie* lexicon,
                                        const DecodeConfig& cfg);

/// CTC or RNNT decoding with blank rescaling and a coverage reward.
std::vector<Hypothesis> beam_decode_fused(GridKind kind, const Matrix& features,
                                          const ModelParams& params,
                                          const LmBinding& lm,
                                          const DecodeConfig& cfg);

/// Dispatch on kind: HAT uses the ILM-corrected objective.
std::vector<Hypothesis> beam_decode(GridKind kind, const Matrix& features,
                                    const ModelParams& params,
                                    const LmBinding& lm,
                                    const LexiconTrie* lexicon,
                                    const DecodeConfig& cfg);

struct ExhaustiveCaps {
  int max_frames = 4;
  int max_labels = 3;  // U_max
  int max_vocab = 3;
};

/// Scores every label sequence of length <= caps.max_labels with the exact
/// sequence posterior (label-level LM only) and returns all of them, best
/// first.
std::vector<Hypothesis> exhaustive_search(GridKind kind, const Matrix& features,
                                          const ModelParams& params,
                                          const LmBinding& lm,
                                          const DecodeConfig& cfg,
                                          const ExhaustiveCaps& caps = {});
Hypothesis exhaustive_decode(GridKind kind, const Matrix& features,
                             const ModelParams& params, const LmBinding& lm,
                             const DecodeConfig& cfg,
                             const ExhaustiveCaps& caps = {});

struct WerStats {
  int ref_words = 0;
  int errors = 0;
  int deletions = 0;
  int insertions = 0;
  int substitutions = 0;
  double rate() const {
    return ref_words == 0 ? (errors == 0 ? 0.0 : 1.0)
                          : static_cast<double>(errors) / ref_words;
  }
  WerStats& operator+=(const WerStats& o);
};

WerStats wer(const std::vector<std::string>& reference,
             const std::vector<std::string>& hypothesis);

/// rank, combined, lambda-weighted components, text; tab separated.
void write_nbest(std::ostream& os, const std::string& utt_id,
                 const std::vector<Hypothesis>& nbest, const DecodeConfig& cfg,
                 GridKind kind, const std::vector<std::string>& texts);

}  // namespace hat
