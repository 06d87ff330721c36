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

// End-to-end steps behind the command-line tool: generate, train, train-lm,
// decode, eval and diagnose. The in-memory functions are usable on their
// own; the run_* functions read and write artifact directories.
//
// Artifact names:
//   task dir    labels.txt lexicon.txt lm_corpus.txt train/ test/ config.txt
//   train dir   model.ckpt train.log timing.log config.txt
//   decode dir  hyps.txt nbest.tsv wer.txt
//   diagnose    lambda2_sweep.tsv linearity.tsv prior_cost.tsv contexts.tsv

#pragma once

#include "hat/checkpoint.hpp"
#include "hat/config.hpp"
#include "hat/data.hpp"
#include "hat/decoder.hpp"
#include "hat/ngram.hpp"
#include "hat/train.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hat {

// In-memory steps -------------------------------------------------------------

/// Word-level LM from a word corpus, or label-level LM from the same corpus
/// spelled out through the lexicon, as selected by decode.lm_mode.
NGramModel train_task_lm(const Config& config, const std::vector<Sentence>& word_corpus,
                         const LexiconTrie& lexicon,
                         const std::vector<std::string>& label_names);

LmBinding bind_lm(const NGramModel* model, LmMode mode, const LexiconTrie& lexicon,
                  const std::vector<std::string>& label_names);

/// Output tokens of a hypothesis: words in word mode, label names otherwise.
std::vector<std::string> hypothesis_tokens(const Hypothesis& h, LmMode mode,
                                           const LexiconTrie& lexicon,
                                           const std::vector<std::string>& label_names);
std::vector<std::string> reference_tokens(const Utterance& u, LmMode mode,
                                          const std::vector<std::string>& label_names);

struct CorpusDecode {
  std::vector<std::vector<Hypothesis>> nbest;
  std::vector<std::vector<std::vector<std::string>>> texts;  // per utterance, per rank
  WerStats first_best;
  WerStats oracle;  // best entry of each n-best list
};

CorpusDecode decode_corpus(GridKind kind, const ModelParams& params,
                           const std::vector<Utterance>& utts, const LmBinding& lm,
                           const LexiconTrie& lexicon,
                           const std::vector<std::string>& label_names,
                           const DecodeConfig& cfg);

/// Two lines: a header naming the columns, then percentages.
///   WER (del/ins/sub)	oracle WER	tokens	utterances
void write_wer_report(std::ostream& os, const CorpusDecode& result, LmMode mode);

struct SweepPoint {
  double lambda2 = 0.0;
  WerStats first_best;
  WerStats oracle;
};

/// One decode per lambda2 value; an empty sweep evaluates decode.lambda2.
std::vector<SweepPoint> lambda2_sweep(GridKind kind, const ModelParams& params,
                                      const std::vector<Utterance>& utts,
                                      const LmBinding& lm, const LexiconTrie& lexicon,
                                      const std::vector<std::string>& label_names,
                                      const Config& config);
void write_sweep(std::ostream& os, double lambda1, const std::vector<SweepPoint>& sweep);

struct ContextPoint {
  int context = kInfiniteContext;
  double final_loss = 0.0;  // mean training loss of the last epoch
  WerStats first_best;
};

/// Trains one model per entry of train.context_grid and decodes the test set.
std::vector<ContextPoint> context_comparison(const Config& config,
                                             const std::vector<Utterance>& train,
                                             const std::vector<Utterance>& test,
                                             const LmBinding& lm, const LexiconTrie& lexicon,
                                             const std::vector<std::string>& label_names);
void write_contexts(std::ostream& os, const std::vector<ContextPoint>& points);

/// `epoch mean_loss prior_cost` rows recovered from a training log.
std::vector<EpochStats> read_epoch_log(std::istream& in);
void write_prior_cost(std::ostream& os, const std::vector<EpochStats>& epochs);

// Artifact-level commands -----------------------------------------------------

struct TaskData {
  TaskFiles files;
  std::vector<Utterance> train;
  std::vector<Utterance> test;
};
TaskData load_task(const std::string& task_dir);

/// Checks that the model and the task agree on |V| and the feature size.
void check_compatible(const ModelConfig& model, const TaskFiles& files,
                      const std::vector<Utterance>& utts);

void run_generate(const Config& config, const std::string& task_dir);
TrainResult run_train(const Config& config, const std::string& task_dir,
                      const std::string& out_dir);
void run_train_lm(const Config& config, const std::string& task_dir,
                  const std::string& arpa_path);

struct DecodePaths {
  std::string checkpoint;
  std::string task_dir;
  std::string dataset = "test";  // subdirectory of the task dir
  std::string lm;                // ARPA file; empty decodes without an LM
  std::string out_dir;
};
CorpusDecode run_decode(const Config& config, const DecodePaths& paths);

struct EvalResult {
  int utterances = 0;
  double mean_loss = 0.0;
  double prior_cost = 0.0;
};
EvalResult run_eval(const std::string& checkpoint, const std::string& task_dir,
                    const std::string& dataset, std::ostream& out);

struct DiagnosePaths {
  std::string checkpoint;
  std::string task_dir;
  std::string dataset = "test";
  std::string lm;
  std::string train_log;  // empty skips the prior-cost series
  std::string out_dir;
  bool train_contexts = false;
};
void run_diagnose(const Config& config, const DiagnosePaths& paths);

}  // namespace hat
