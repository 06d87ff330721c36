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

#include "hat/pipeline.hpp"

#include "hat/ilm.hpp"
#include "hat/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace hat {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) s += (i ? " " : "") + tokens[i];
  return s;
}

std::string percent(const WerStats& s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * s.rate());
  return buf;
}

std::string percent_of(int count, int total) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", total == 0 ? 0.0 : 100.0 * count / total);
  return buf;
}

std::ofstream open_file(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  return out;
}

std::string in_dir(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

}  // namespace

// In-memory steps -------------------------------------------------------------

NGramModel train_task_lm(const Config& config, const std::vector<Sentence>& word_corpus,
                         const LexiconTrie& lexicon,
                         const std::vector<std::string>& label_names) {
  NGramTrainOptions opts;
  opts.order = config.train.lm_order;
  opts.add_k = config.train.lm_add_k;
  if (config.decode.mode == LmMode::kWord) return train_ngram(word_corpus, opts);
  return train_ngram(label_corpus(word_corpus, lexicon, label_names), opts);
}

LmBinding bind_lm(const NGramModel* model, LmMode mode, const LexiconTrie& lexicon,
                  const std::vector<std::string>& label_names) {
  if (!model) return LmBinding::none();
  return mode == LmMode::kWord ? LmBinding::for_words(*model, lexicon)
                               : LmBinding::for_labels(*model, label_names);
}

std::vector<std::string> hypothesis_tokens(const Hypothesis& h, LmMode mode,
                                           const LexiconTrie& lexicon,
                                           const std::vector<std::string>& label_names) {
  std::vector<std::string> out;
  if (mode == LmMode::kWord) {
    for (int w : h.words) out.push_back(lexicon.word(w));
  } else {
    for (Symbol y : h.labels) out.push_back(label_names.at(Alphabet::index_of(y)));
  }
  return out;
}

std::vector<std::string> reference_tokens(const Utterance& u, LmMode mode,
                                          const std::vector<std::string>& label_names) {
  if (mode == LmMode::kWord) return u.words;
  std::vector<std::string> out;
  for (Symbol y : u.labels) out.push_back(label_names.at(Alphabet::index_of(y)));
  return out;
}

CorpusDecode decode_corpus(GridKind kind, const ModelParams& params,
                           const std::vector<Utterance>& utts, const LmBinding& lm,
                           const LexiconTrie& lexicon,
                           const std::vector<std::string>& label_names,
                           const DecodeConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(utts.size());
  CorpusDecode result;
  result.nbest.resize(n);
  result.texts.resize(n);
  std::vector<WerStats> first(n), oracle(n);
  parallel_for(n, [&](int i) {
    std::vector<Hypothesis> nbest;
    try {
      nbest = beam_decode(kind, utts[i].features, params, lm, &lexicon, cfg);
    } catch (const DecodeFailure&) {
      nbest.clear();
    }
    const auto ref = reference_tokens(utts[i], cfg.mode, label_names);
    std::vector<std::vector<std::string>> texts;
    for (const auto& h : nbest) texts.push_back(hypothesis_tokens(h, cfg.mode, lexicon, label_names));
    first[i] = wer(ref, texts.empty() ? std::vector<std::string>{} : texts.front());
    oracle[i] = first[i];
    for (const auto& t : texts) {
      const WerStats s = wer(ref, t);
      if (s.errors < oracle[i].errors) oracle[i] = s;
    }
    result.nbest[i] = std::move(nbest);
    result.texts[i] = std::move(texts);
  });
  for (int i = 0; i < n; ++i) {
    result.first_best += first[i];
    result.oracle += oracle[i];
  }
  return result;
}

void write_wer_report(std::ostream& os, const CorpusDecode& r, LmMode mode) {
  const WerStats& s = r.first_best;
  os << "WER (del/ins/sub)\toracle WER\tunit\ttokens\tutterances\n";
  os << percent(s) << " (" << percent_of(s.deletions, s.ref_words) << '/'
     << percent_of(s.insertions, s.ref_words) << '/'
     << percent_of(s.substitutions, s.ref_words) << ")\t" << percent(r.oracle) << '\t'
     << (mode == LmMode::kWord ? "word" : "label") << '\t' << s.ref_words << '\t'
     << r.nbest.size() << '\n';
}

std::vector<SweepPoint> lambda2_sweep(GridKind kind, const ModelParams& params,
                                      const std::vector<Utterance>& utts,
                                      const LmBinding& lm, const LexiconTrie& lexicon,
                                      const std::vector<std::string>& label_names,
                                      const Config& config) {
  std::vector<double> grid = config.lambda2_sweep;
  if (grid.empty() || kind != GridKind::kHat) grid = {config.decode.lambda2};
  std::vector<SweepPoint> out;
  for (double l2 : grid) {
    DecodeConfig cfg = config.decode;
    cfg.lambda2 = l2;
    const CorpusDecode r = decode_corpus(kind, params, utts, lm, lexicon, label_names, cfg);
    out.push_back({l2, r.first_best, r.oracle});
  }
  return out;
}

void write_sweep(std::ostream& os, double lambda1, const std::vector<SweepPoint>& sweep) {
  os << "lambda1\tlambda2\twer\tdel\tins\tsub\toracle_wer\n";
  char buf[64];
  for (const auto& p : sweep) {
    std::snprintf(buf, sizeof buf, "%g\t%g\t", lambda1, p.lambda2);
    os << buf << percent(p.first_best) << '\t' << p.first_best.deletions << '\t'
       << p.first_best.insertions << '\t' << p.first_best.substitutions << '\t'
       << percent(p.oracle) << '\n';
  }
}

std::vector<ContextPoint> context_comparison(const Config& config,
                                             const std::vector<Utterance>& train,
                                             const std::vector<Utterance>& test,
                                             const LmBinding& lm, const LexiconTrie& lexicon,
                                             const std::vector<std::string>& label_names) {
  const auto examples = to_examples(train);
  std::vector<ContextPoint> out;
  for (int c : config.train.context_grid) {
    Config cc = config;
    cc.model.context = c;
    const TrainResult tr = train_model(cc, examples);
    ContextPoint p;
    p.context = c;
    p.final_loss = tr.epochs.empty() ? mean_loss(cc.train.loss, examples, tr.params)
                                     : tr.epochs.back().mean_loss;
    p.first_best = decode_corpus(cc.train.loss, tr.params, test, lm, lexicon, label_names,
                                 cc.decode)
                       .first_best;
    out.push_back(p);
  }
  return out;
}

void write_contexts(std::ostream& os, const std::vector<ContextPoint>& points) {
  os << "context\tfinal_loss\twer\n";
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "\t%.6f\t", p.final_loss);
    os << format_context(p.context) << buf << percent(p.first_best) << '\n';
  }
}

std::vector<EpochStats> read_epoch_log(std::istream& in) {
  std::vector<EpochStats> out;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.rfind("epoch ", 0) != 0) continue;
    std::istringstream ss(line);
    std::string w1, w2, w3;
    EpochStats e;
    if (!(ss >> w1 >> e.epoch >> w2 >> e.mean_loss >> w3 >> e.prior_cost) ||
        w2 != "mean_loss" || w3 != "prior_cost")
      throw ParseError("training log line " + std::to_string(line_no) + ": malformed epoch line");
    out.push_back(e);
  }
  return out;
}

void write_prior_cost(std::ostream& os, const std::vector<EpochStats>& epochs) {
  os << "epoch\tmean_loss\tprior_cost\n";
  char buf[96];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof buf, "%d\t%.10g\t%.10g\n", e.epoch, e.mean_loss, e.prior_cost);
    os << buf;
  }
}

// Artifact-level commands -----------------------------------------------------

TaskData load_task(const std::string& task_dir) {
  TaskData d;
  d.files = read_task_files(task_dir);
  if (fs::exists(in_dir(task_dir, "train/manifest.tsv")))
    d.train = read_dataset(in_dir(task_dir, "train"), d.files.lexicon);
  if (fs::exists(in_dir(task_dir, "test/manifest.tsv")))
    d.test = read_dataset(in_dir(task_dir, "test"), d.files.lexicon);
  return d;
}

void check_compatible(const ModelConfig& model, const TaskFiles& files,
                      const std::vector<Utterance>& utts) {
  if (model.vocab != static_cast<int>(files.label_names.size()))
    throw ConfigError("model.vocab is " + std::to_string(model.vocab) + " but the task has " +
                      std::to_string(files.label_names.size()) + " labels");
  for (const auto& u : utts)
    if (u.features.cols() != model.feat_dim)
      throw ConfigError("model.feat_dim is " + std::to_string(model.feat_dim) +
                        " but utterance " + u.id + " has " +
                        std::to_string(u.features.cols()) + " feature columns");
}

void run_generate(const Config& config, const std::string& task_dir) {
  config.validate();
  const GeneratedData data = generate(config.task);
  write_task(task_dir, data);
  auto out = open_file(in_dir(task_dir, "config.txt"));
  write_config(out, config);
}

TrainResult run_train(const Config& config, const std::string& task_dir,
                      const std::string& out_dir) {
  config.validate();
  const TaskData task = load_task(task_dir);
  check_compatible(config.model, task.files, task.train);
  fs::create_directories(out_dir);
  auto log = open_file(in_dir(out_dir, "train.log"));
  auto timing = open_file(in_dir(out_dir, "timing.log"));
  const auto examples = to_examples(task.train);
  TrainResult result = train_model(config, examples, {&log, &timing});
  save_checkpoint(in_dir(out_dir, "model.ckpt"), {result.params, config.train.loss});
  auto cfg_out = open_file(in_dir(out_dir, "config.txt"));
  write_config(cfg_out, config);
  return result;
}

void run_train_lm(const Config& config, const std::string& task_dir,
                  const std::string& arpa_path) {
  config.validate();
  const TaskFiles files = read_task_files(task_dir);
  const auto corpus = read_corpus_file(in_dir(task_dir, "lm_corpus.txt"));
  save_arpa_file(arpa_path, train_task_lm(config, corpus, files.lexicon, files.label_names));
}

CorpusDecode run_decode(const Config& config, const DecodePaths& paths) {
  config.validate();
  const Checkpoint ckpt = load_checkpoint(paths.checkpoint);
  const TaskFiles files = read_task_files(paths.task_dir);
  const auto utts = read_dataset(in_dir(paths.task_dir, paths.dataset), files.lexicon);
  check_compatible(ckpt.params.config, files, utts);
  std::optional<NGramModel> lm;
  if (!paths.lm.empty()) lm = load_arpa_file(paths.lm);
  const LmBinding binding =
      bind_lm(lm ? &*lm : nullptr, config.decode.mode, files.lexicon, files.label_names);
  CorpusDecode r = decode_corpus(ckpt.kind, ckpt.params, utts, binding, files.lexicon,
                                 files.label_names, config.decode);
  fs::create_directories(paths.out_dir);
  auto hyps = open_file(in_dir(paths.out_dir, "hyps.txt"));
  auto nbest = open_file(in_dir(paths.out_dir, "nbest.tsv"));
  for (std::size_t i = 0; i < utts.size(); ++i) {
    hyps << utts[i].id << '\t' << (r.texts[i].empty() ? "" : join(r.texts[i].front())) << '\n';
    std::vector<std::string> texts;
    for (const auto& t : r.texts[i]) texts.push_back(join(t));
    write_nbest(nbest, utts[i].id, r.nbest[i], config.decode, ckpt.kind, texts);
  }
  auto report = open_file(in_dir(paths.out_dir, "wer.txt"));
  write_wer_report(report, r, config.decode.mode);
  return r;
}

EvalResult run_eval(const std::string& checkpoint, const std::string& task_dir,
                    const std::string& dataset, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const TaskFiles files = read_task_files(task_dir);
  const auto utts = read_dataset(in_dir(task_dir, dataset), files.lexicon);
  check_compatible(ckpt.params.config, files, utts);
  if (utts.empty()) throw ArgumentError("dataset " + dataset + " is empty");
  const auto examples = to_examples(utts);
  EvalResult r;
  r.utterances = static_cast<int>(utts.size());
  r.mean_loss = mean_loss(ckpt.kind, examples, ckpt.params);
  r.prior_cost = prior_cost(transcripts(utts), ckpt.params);
  char buf[160];
  std::snprintf(buf, sizeof buf, "model %s\nutterances %d\nmean_loss %.10g\nprior_cost %.10g\n",
                to_string(ckpt.kind), r.utterances, r.mean_loss, r.prior_cost);
  out << buf;
  return r;
}

void run_diagnose(const Config& config, const DiagnosePaths& paths) {
  config.validate();
  const Checkpoint ckpt = load_checkpoint(paths.checkpoint);
  const TaskData task = load_task(paths.task_dir);
  const auto utts = read_dataset(in_dir(paths.task_dir, paths.dataset), task.files.lexicon);
  check_compatible(ckpt.params.config, task.files, utts);
  std::optional<NGramModel> lm;
  if (!paths.lm.empty()) lm = load_arpa_file(paths.lm);
  const LmBinding binding =
      bind_lm(lm ? &*lm : nullptr, config.decode.mode, task.files.lexicon, task.files.label_names);
  fs::create_directories(paths.out_dir);

  {
    const auto sweep = lambda2_sweep(ckpt.kind, ckpt.params, utts, binding, task.files.lexicon,
                                     task.files.label_names, config);
    auto out = open_file(in_dir(paths.out_dir, "lambda2_sweep.tsv"));
    write_sweep(out, config.decode.lambda1, sweep);
  }
  {
    const auto examples = to_examples(utts);
    const LinearityStats stats = linearity_stats(examples, ckpt.params);
    std::vector<double> residuals(examples.size(), 0.0);
    parallel_for(static_cast<int>(examples.size()), [&](int i) {
      residuals[i] = factorization_residual(
          forward(examples[i].features, examples[i].labels, ckpt.params), ckpt.params);
    });
    const double max_residual =
        residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
    auto out = open_file(in_dir(paths.out_dir, "linearity.tsv"));
    write_linearity(out, stats, max_residual);
  }
  if (!paths.train_log.empty()) {
    std::ifstream in(paths.train_log);
    if (!in) throw ParseError("cannot open " + paths.train_log);
    auto out = open_file(in_dir(paths.out_dir, "prior_cost.tsv"));
    write_prior_cost(out, read_epoch_log(in));
  }
  if (paths.train_contexts) {
    check_compatible(config.model, task.files, task.train);
    Config cc = config;
    cc.train.loss = ckpt.kind;
    const auto points = context_comparison(cc, task.train, utts, binding, task.files.lexicon,
                                           task.files.label_names);
    auto out = open_file(in_dir(paths.out_dir, "contexts.tsv"));
    write_contexts(out, points);
  }
}

}  // namespace hat
