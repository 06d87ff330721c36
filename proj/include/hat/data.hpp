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

// Synthetic speech-like task and on-disk dataset format.
//
// A task directory holds
//   labels.txt      one label name per line, in id order (id 1 first)
//   lexicon.txt     word followed by its label names
//   lm_corpus.txt   text-only sentences for LM training
//   train/ test/    datasets
//
// A dataset directory holds manifest.tsv (id, frame count, transcript) and
// one <id>.feat file per utterance: int32 T, int32 D_in, then T*D_in
// row-major float64, all little-endian.

#pragma once

#include "hat/core.hpp"
#include "hat/decoder.hpp"
#include "hat/ilm.hpp"
#include "hat/ngram.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace hat {

struct Utterance {
  std::string id;
  Matrix features;  // T x D_in
  Sentence words;
  LabelSeq labels;
};

/// Word-level Markov grammar. Row w of `transition` holds successor
/// weights over words followed by a final stop column.
struct WordGrammar {
  Vector start;       // |W|
  Matrix transition;  // |W| x (|W|+1)
  int max_words = 4;

  Sentence sample(const std::vector<std::string>& words, std::mt19937_64& gen) const;
};

struct SyntheticTaskSpec {
  int vocab = 6;
  int num_words = 20;
  int min_word_len = 2;
  int max_word_len = 4;
  int min_duration = 2;
  int max_duration = 4;
  int feat_dim = 16;
  double noise_std = 0.3;
  int train_utts = 500;
  int test_utts = 100;
  int lm_sentences = 5000;
  int max_sentence_words = 4;
  double stop_prob = 0.35;
  // Mixing weight of an independent grammar into the text-domain grammar;
  // 0 makes LM text and acoustic transcripts share one distribution.
  double text_bias = 0.7;
  std::uint64_t seed = 47;

  void validate() const;
};

struct SyntheticTask {
  SyntheticTaskSpec spec;
  std::vector<std::string> label_names;
  std::vector<std::string> words;
  std::vector<LabelSeq> pronunciations;
  Matrix prototypes;  // |V| x D_in
  WordGrammar acoustic_grammar;  // training transcripts
  WordGrammar text_grammar;      // LM text and test transcripts

  LexiconTrie lexicon() const;
};

/// Builds the lexicon, grammars and prototypes from the seed.
SyntheticTask make_task(const SyntheticTaskSpec& spec);

/// Renders features: each label repeats its prototype for a sampled
/// duration, plus Gaussian noise.
Matrix render_features(const SyntheticTask& task, const LabelSeq& labels,
                       std::mt19937_64& gen);
LabelSeq pronounce(const LexiconTrie& lexicon, const Sentence& words);

struct GeneratedData {
  SyntheticTask task;
  std::vector<Utterance> train;
  std::vector<Utterance> test;
  std::vector<Sentence> lm_corpus;
};

GeneratedData generate(const SyntheticTaskSpec& spec);
std::vector<Utterance> sample_utterances(const SyntheticTask& task,
                                         const WordGrammar& grammar, int count,
                                         const std::string& prefix,
                                         std::mt19937_64& gen);

std::vector<Example> to_examples(const std::vector<Utterance>& utts);
std::vector<LabelSeq> transcripts(const std::vector<Utterance>& utts);
/// Label-name sentences for a label-level LM.
std::vector<Sentence> label_corpus(const std::vector<Sentence>& words,
                                   const LexiconTrie& lexicon,
                                   const std::vector<std::string>& label_names);

// I/O ------------------------------------------------------------------------

void write_features(const std::string& path, const Matrix& features);
Matrix read_features(const std::string& path);

void write_dataset(const std::string& dir, const std::vector<Utterance>& utts);
/// Labels are derived from the transcript through the lexicon.
std::vector<Utterance> read_dataset(const std::string& dir,
                                    const LexiconTrie& lexicon);

void write_task(const std::string& dir, const GeneratedData& data);

struct TaskFiles {
  std::vector<std::string> label_names;
  LexiconTrie lexicon;
};
TaskFiles read_task_files(const std::string& dir);

}  // namespace hat
