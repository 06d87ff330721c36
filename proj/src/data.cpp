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

#include "hat/data.hpp"

#include "binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace hat {

namespace fs = std::filesystem;
using detail::get_f64;
using detail::get_u32;
using detail::put_f64;
using detail::put_u32;

void SyntheticTaskSpec::validate() const {
  if (vocab < 1) throw ArgumentError("task.vocab must be >= 1");
  if (num_words < 1) throw ArgumentError("task.words must be >= 1");
  if (min_word_len < 1 || max_word_len < min_word_len)
    throw ArgumentError("task word length range is invalid");
  if (min_duration < 1 || max_duration < min_duration)
    throw ArgumentError("task duration range must satisfy 1 <= min <= max");
  if (feat_dim < 1) throw ArgumentError("task.feat_dim must be >= 1");
  if (!(noise_std >= 0)) throw ArgumentError("task.noise_std must be >= 0");
  if (train_utts < 0 || test_utts < 0 || lm_sentences < 0)
    throw ArgumentError("task sizes must be >= 0");
  if (max_sentence_words < 1) throw ArgumentError("task.max_sentence_words must be >= 1");
  if (!(stop_prob > 0 && stop_prob < 1)) throw ArgumentError("task.stop_prob must be in (0,1)");
  if (!(text_bias >= 0 && text_bias <= 1)) throw ArgumentError("task.text_bias must be in [0,1]");
  double distinct = 0;
  for (int len = min_word_len; len <= max_word_len; ++len) {
    distinct += std::pow(static_cast<double>(vocab), len);
    if (distinct >= num_words) break;
  }
  if (distinct < num_words)
    throw ArgumentError("not enough distinct pronunciations for task.words");
}

namespace {

int sample_index(const Vector& weights, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = unit(gen) * weights.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    acc += weights(i);
    if (r < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size() - 1);
}

WordGrammar random_grammar(int num_words, const SyntheticTaskSpec& spec,
                           std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, num_words - 1);
  WordGrammar g;
  g.max_words = spec.max_sentence_words;
  g.start.resize(num_words);
  for (int w = 0; w < num_words; ++w) g.start(w) = std::exp(normal(gen));
  g.start /= g.start.sum();
  g.transition = Matrix::Zero(num_words, num_words + 1);
  for (int w = 0; w < num_words; ++w) {
    Vector row = Vector::Constant(num_words, 0.1);
    for (int k = 0; k < 3; ++k) row(pick(gen)) += 2.0 + std::exp(normal(gen));
    row *= (1.0 - spec.stop_prob) / row.sum();
    g.transition.row(w).head(num_words) = row.transpose();
    g.transition(w, num_words) = spec.stop_prob;
  }
  return g;
}

std::string label_name(int index, int vocab) {
  if (vocab <= 26) return std::string(1, static_cast<char>('a' + index));
  return "l" + std::to_string(index + 1);
}

}  // namespace

Sentence WordGrammar::sample(const std::vector<std::string>& words,
                             std::mt19937_64& gen) const {
  Sentence s;
  int w = sample_index(start, gen);
  s.push_back(words[w]);
  const int stop = static_cast<int>(words.size());
  while (static_cast<int>(s.size()) < max_words) {
    w = sample_index(transition.row(w).transpose(), gen);
    if (w == stop) break;
    s.push_back(words[w]);
  }
  return s;
}

LexiconTrie SyntheticTask::lexicon() const {
  LexiconTrie trie;
  for (std::size_t w = 0; w < words.size(); ++w) trie.add_word(words[w], pronunciations[w]);
  return trie;
}

SyntheticTask make_task(const SyntheticTaskSpec& spec) {
  spec.validate();
  SyntheticTask task;
  task.spec = spec;
  std::mt19937_64 gen(spec.seed);
  for (int k = 0; k < spec.vocab; ++k) task.label_names.push_back(label_name(k, spec.vocab));

  std::uniform_int_distribution<int> len_dist(spec.min_word_len, spec.max_word_len);
  std::uniform_int_distribution<int> label_dist(1, spec.vocab);
  std::set<LabelSeq> used;
  char name[32];
  for (int w = 0; w < spec.num_words; ++w) {
    LabelSeq pron;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw ArgumentError("could not draw distinct pronunciations");
      pron.assign(len_dist(gen), 0);
      for (auto& y : pron) y = label_dist(gen);
      if (used.insert(pron).second) break;
    }
    std::snprintf(name, sizeof name, "w%02d", w);
    task.words.push_back(name);
    task.pronunciations.push_back(pron);
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  task.prototypes.resize(spec.vocab, spec.feat_dim);
  for (Eigen::Index i = 0; i < task.prototypes.size(); ++i)
    task.prototypes.data()[i] = normal(gen);

  task.acoustic_grammar = random_grammar(spec.num_words, spec, gen);
  const WordGrammar other = random_grammar(spec.num_words, spec, gen);
  task.text_grammar = task.acoustic_grammar;
  task.text_grammar.start =
      (1.0 - spec.text_bias) * task.acoustic_grammar.start + spec.text_bias * other.start;
  task.text_grammar.transition = (1.0 - spec.text_bias) * task.acoustic_grammar.transition +
                                 spec.text_bias * other.transition;
  return task;
}

Matrix render_features(const SyntheticTask& task, const LabelSeq& labels,
                       std::mt19937_64& gen) {
  const auto& spec = task.spec;
  std::uniform_int_distribution<int> dur(spec.min_duration, spec.max_duration);
  std::vector<int> durations;
  int frames = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    durations.push_back(dur(gen));
    frames += durations.back();
  }
  // An empty transcript still needs one frame of silence-like noise.
  Matrix x = Matrix::Zero(std::max(frames, 1), spec.feat_dim);
  int row = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (int k = 0; k < durations[i]; ++k)
      x.row(row++) = task.prototypes.row(Alphabet::index_of(labels[i]));
  if (spec.noise_std > 0) {
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += noise(gen);
  }
  return x;
}

LabelSeq pronounce(const LexiconTrie& lexicon, const Sentence& words) {
  LabelSeq out;
  for (const auto& w : words) {
    const int id = lexicon.find_word(w);
    if (id < 0) throw VocabularyError("word '" + w + "' is not in the lexicon");
    const auto& p = lexicon.pronunciation(id);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<Utterance> sample_utterances(const SyntheticTask& task,
                                         const WordGrammar& grammar, int count,
                                         const std::string& prefix,
                                         std::mt19937_64& gen) {
  const LexiconTrie lex = task.lexicon();
  std::vector<Utterance> out;
  char id[64];
  for (int i = 0; i < count; ++i) {
    Utterance u;
    std::snprintf(id, sizeof id, "%s%05d", prefix.c_str(), i);
    u.id = id;
    u.words = grammar.sample(task.words, gen);
    u.labels = pronounce(lex, u.words);
    u.features = render_features(task, u.labels, gen);
    out.push_back(std::move(u));
  }
  return out;
}

GeneratedData generate(const SyntheticTaskSpec& spec) {
  GeneratedData d;
  d.task = make_task(spec);
  // Separate streams so changing one set size leaves the others unchanged.
  std::mt19937_64 train_gen(spec.seed + 1), test_gen(spec.seed + 2), text_gen(spec.seed + 3);
  d.train = sample_utterances(d.task, d.task.acoustic_grammar, spec.train_utts,
                              "train", train_gen);
  d.test = sample_utterances(d.task, d.task.text_grammar, spec.test_utts, "test",
                             test_gen);
  for (int i = 0; i < spec.lm_sentences; ++i)
    d.lm_corpus.push_back(d.task.text_grammar.sample(d.task.words, text_gen));
  return d;
}

std::vector<Example> to_examples(const std::vector<Utterance>& utts) {
  std::vector<Example> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back({u.features, u.labels});
  return out;
}

std::vector<LabelSeq> transcripts(const std::vector<Utterance>& utts) {
  std::vector<LabelSeq> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back(u.labels);
  return out;
}

std::vector<Sentence> label_corpus(const std::vector<Sentence>& words,
                                   const LexiconTrie& lexicon,
                                   const std::vector<std::string>& label_names) {
  std::vector<Sentence> out;
  out.reserve(words.size());
  for (const auto& s : words) {
    Sentence labels;
    for (Symbol y : pronounce(lexicon, s)) labels.push_back(label_names.at(Alphabet::index_of(y)));
    out.push_back(std::move(labels));
  }
  return out;
}

// I/O ------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw ParseError("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw ParseError("cannot open " + path);
  return in;
}

}  // namespace

void write_features(const std::string& path, const Matrix& x) {
  auto out = open_out(path, true);
  put_u32(out, static_cast<std::uint32_t>(x.rows()));
  put_u32(out, static_cast<std::uint32_t>(x.cols()));
  for (Eigen::Index t = 0; t < x.rows(); ++t)
    for (Eigen::Index d = 0; d < x.cols(); ++d) put_f64(out, x(t, d));
}

Matrix read_features(const std::string& path) {
  auto in = open_in(path, true);
  const std::uint32_t T = get_u32(in, path), D = get_u32(in, path);
  if (T < 1 || D < 1 || T > (1u << 24) || D > (1u << 16))
    throw ParseError("implausible feature shape in " + path);
  Matrix x(T, D);
  for (Eigen::Index t = 0; t < x.rows(); ++t)
    for (Eigen::Index d = 0; d < x.cols(); ++d) x(t, d) = get_f64(in, path);
  if (in.peek() != std::char_traits<char>::eof())
    throw ParseError("trailing bytes in " + path);
  return x;
}

void write_dataset(const std::string& dir, const std::vector<Utterance>& utts) {
  fs::create_directories(dir);
  auto manifest = open_out((fs::path(dir) / "manifest.tsv").string());
  for (const auto& u : utts) {
    manifest << u.id << '\t' << u.features.rows() << '\t';
    for (std::size_t i = 0; i < u.words.size(); ++i) manifest << (i ? " " : "") << u.words[i];
    manifest << '\n';
    write_features((fs::path(dir) / (u.id + ".feat")).string(), u.features);
  }
}

std::vector<Utterance> read_dataset(const std::string& dir, const LexiconTrie& lexicon) {
  const std::string path = (fs::path(dir) / "manifest.tsv").string();
  auto in = open_in(path);
  std::vector<Utterance> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, frames_field, text;
    if (!std::getline(ss, id, '\t') || !std::getline(ss, frames_field, '\t'))
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected id, frames, transcript");
    std::getline(ss, text);
    Utterance u;
    u.id = id;
    std::istringstream ws(text);
    for (std::string w; ws >> w;) u.words.push_back(w);
    u.labels = pronounce(lexicon, u.words);
    u.features = read_features((fs::path(dir) / (id + ".feat")).string());
    long frames = 0;
    try {
      frames = std::stol(frames_field);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad frame count");
    }
    if (frames != u.features.rows())
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": frame count disagrees with feature file");
    out.push_back(std::move(u));
  }
  return out;
}

void write_task(const std::string& dir, const GeneratedData& data) {
  fs::create_directories(dir);
  {
    auto out = open_out((fs::path(dir) / "labels.txt").string());
    for (const auto& n : data.task.label_names) out << n << '\n';
  }
  {
    auto out = open_out((fs::path(dir) / "lexicon.txt").string());
    for (std::size_t w = 0; w < data.task.words.size(); ++w) {
      out << data.task.words[w];
      for (Symbol y : data.task.pronunciations[w])
        out << ' ' << data.task.label_names[Alphabet::index_of(y)];
      out << '\n';
    }
  }
  {
    auto out = open_out((fs::path(dir) / "lm_corpus.txt").string());
    write_corpus(out, data.lm_corpus);
  }
  write_dataset((fs::path(dir) / "train").string(), data.train);
  write_dataset((fs::path(dir) / "test").string(), data.test);
}

TaskFiles read_task_files(const std::string& dir) {
  TaskFiles tf;
  {
    auto in = open_in((fs::path(dir) / "labels.txt").string());
    for (std::string l; std::getline(in, l);)
      if (!l.empty()) tf.label_names.push_back(l);
  }
  if (tf.label_names.empty()) throw ParseError("labels.txt lists no labels");
  std::map<std::string, Symbol> label_id;
  for (std::size_t k = 0; k < tf.label_names.size(); ++k)
    label_id[tf.label_names[k]] = Alphabet::label_at(static_cast<int>(k));
  const std::string lex_path = (fs::path(dir) / "lexicon.txt").string();
  auto in = open_in(lex_path);
  int line_no = 0;
  for (std::string l; std::getline(in, l);) {
    ++line_no;
    std::istringstream ss(l);
    std::string word, name;
    if (!(ss >> word)) continue;
    LabelSeq pron;
    while (ss >> name) {
      auto it = label_id.find(name);
      if (it == label_id.end())
        throw ParseError(lex_path + ":" + std::to_string(line_no) + ": unknown label '" + name + "'");
      pron.push_back(it->second);
    }
    tf.lexicon.add_word(word, pron);
  }
  return tf;
}

}  // namespace hat
