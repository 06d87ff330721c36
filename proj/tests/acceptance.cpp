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


// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when any
// criterion fails.

#include "hat/config.hpp"
#include "hat/data.hpp"
#include "hat/decoder.hpp"
#include "hat/gradients.hpp"
#include "hat/ilm.hpp"
#include "hat/loss.hpp"
#include "hat/ngram.hpp"
#include "hat/pipeline.hpp"
#include "hat/selftest.hpp"
#include "hat/train.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace hat;
namespace fs = std::filesystem;

namespace {

using Gen = std::mt19937_64;
using Clock = std::chrono::steady_clock;

int pick(Gen& gen, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

// 1 ---------------------------------------------------------------------------

Outcome marginalization() {
  const auto start = Clock::now();
  Gen gen(47);
  double hat_err = 0.0, rnnt_err = 0.0, ctc_err = 0.0;
  constexpr int kModels = 200;
  for (int i = 0; i < kModels; ++i) {
    const int V = pick(gen, 1, 4), T = pick(gen, 1, 5), U = pick(gen, 0, 3);
    const ModelParams p = random_small_model(gen(), V);
    const Matrix x = random_features(gen, T, p.config.feat_dim);
    const LabelSeq y = random_labels(gen, U, V);
    const Activations acts = forward(x, y, p);
    const auto h = hat_grid(acts, p);
    const auto r = rnnt_grid(acts, p);
    hat_err = std::max(hat_err, std::abs(hat_loss(h, y).neg_log_posterior - brute_force_loss(h, y)));
    rnnt_err = std::max(rnnt_err, std::abs(rnnt_loss(r, y).neg_log_posterior - brute_force_loss(r, y)));

    const int Tc = pick(gen, 1, 8);
    LabelSeq yc = random_labels(gen, pick(gen, 0, 4), V);
    while (min_ctc_frames(yc) > Tc) yc.pop_back();
    const auto c = ctc_grid(encode(random_features(gen, Tc, p.config.feat_dim), p), p);
    ctc_err = std::max(ctc_err, std::abs(ctc_loss(c, yc).neg_log_posterior - brute_force_loss(c, yc)));
  }
  const double elapsed = seconds_since(start);
  const double worst = std::max({hat_err, rnnt_err, ctc_err});
  return {worst <= 1e-8 && elapsed < 30.0,
          format("%d models; max |dp - enumeration| hat %.2e rnnt %.2e ctc %.2e (tol 1e-8); %.2f s (limit 30 s)",
                 kModels, hat_err, rnnt_err, ctc_err, elapsed)};
}

// 2 ---------------------------------------------------------------------------

double gradient_error(const Matrix& x, const LabelSeq& y, ModelParams p, double mtl) {
  const ObjectiveResult r = objective_gradients(GridKind::kHat, x, y, p, mtl);
  auto params = p.tensors();
  const auto grads = r.grads.tensors();
  constexpr double kEps = 1e-5;
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k)
    for (Eigen::Index i = 0; i < params[k].size(); ++i) {
      double& w = params[k].data[i];
      const double saved = w;
      w = saved + kEps;
      const double up = objective_value(GridKind::kHat, x, y, p, mtl);
      w = saved - kEps;
      const double down = objective_value(GridKind::kHat, x, y, p, mtl);
      w = saved;
      const double numeric = (up - down) / (2 * kEps);
      const double analytic = grads[k].data[i];
      if (std::abs(numeric) < 1e-8 && std::abs(analytic) < 1e-8) continue;
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
    }
  return worst;
}

Outcome gradients() {
  const auto start = Clock::now();
  Gen gen(47);
  const ModelParams p = random_small_model(47, 3);
  const Matrix x = random_features(gen, 4, p.config.feat_dim);
  const LabelSeq y = random_labels(gen, 2, 3);
  const double plain = gradient_error(x, y, p, 0.0);
  const double mtl = gradient_error(x, y, p, 0.1);
  const double elapsed = seconds_since(start);
  return {plain <= 1e-4 && mtl <= 1e-4 && elapsed < 60.0,
          format("seed 47, T=4 U=2 |V|=3, eps 1e-5; max relative error hat %.2e, hat+mtl %.2e (tol 1e-4); %.2f s",
                 plain, mtl, elapsed)};
}

// 3 ---------------------------------------------------------------------------

Outcome local_normalization() {
  Gen gen(3);
  double worst = 0.0;
  long cells = 0;
  for (int i = 0; i < 50; ++i) {
    const int V = pick(gen, 1, 6), T = pick(gen, 1, 6), U = pick(gen, 0, 4);
    const ModelParams p = random_small_model(gen(), V, 3, kInfiniteContext, 2.0);
    const LabelSeq y = random_labels(gen, U, V);
    const auto g = hat_grid(forward(random_features(gen, T, 3), y, p), p);
    for (int t = 0; t < T; ++t)
      for (int u = 0; u <= U; ++u, ++cells) {
        CompensatedSum<double> total;
        total.add(std::exp(g.blank_edge(t, u)));
        for (Symbol s = 1; s <= V; ++s) total.add(std::exp(g.label_edge(t, u, s)));
        worst = std::max(worst, std::abs(total.value() - 1.0));
      }
  }
  return {worst <= 1e-12, format("50 models, %ld cells; max |b + (1-b) sum P - 1| %.2e (tol 1e-12)", cells, worst)};
}

// 4 ---------------------------------------------------------------------------

Outcome ilm_suite() {
  Gen gen(4);
  std::normal_distribution<double> normal(0.0, 3.0);
  double shift = 0.0, recovery = 0.0, residual = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int n = pick(gen, 2, 8);
    Vector v(n);
    for (int k = 0; k < n; ++k) v(k) = normal(gen);
    const double c = 5.0 * normal(gen);
    shift = std::max(shift, (softmax(v) - softmax(Vector((v.array() + c).matrix()))).cwiseAbs().maxCoeff());
    const Vector w = (softmax(v).array().log() + c).matrix();
    if ((softmax(v) - softmax(w)).cwiseAbs().maxCoeff() > 1e-12) recovery = 1.0;
    const Vector d = v - w;
    recovery = std::max(recovery, d.maxCoeff() - d.minCoeff());
  }
  for (int i = 0; i < 20; ++i) {
    const int V = pick(gen, 2, 4);
    ModelParams p = random_small_model(gen(), V);
    p.config.activation = JointActivation::kIdentity;
    const LabelSeq y = random_labels(gen, pick(gen, 0, 3), V);
    residual = std::max(residual, factorization_residual(forward(random_features(gen, pick(gen, 1, 5), 3), y, p), p));
  }
  return {shift <= 1e-12 && recovery <= 1e-9 && residual <= 1e-9,
          format("shift invariance %.2e (tol 1e-12); constant-difference recovery %.2e (tol 1e-9); "
                 "linear-joint factorization residual over 20 models %.2e (tol 1e-9)",
                 shift, recovery, residual)};
}

// 5 ---------------------------------------------------------------------------

Outcome decoder_oracle() {
  Gen gen(5);
  const std::vector<std::string> names = {"a", "b", "c"};
  int hat_miss = 0, fused_miss = 0;
  constexpr int kInstances = 100;
  for (int i = 0; i < 2 * kInstances; ++i) {
    const bool fused = i >= kInstances;
    const GridKind kind = !fused ? GridKind::kHat : (i % 2 ? GridKind::kCtc : GridKind::kRnnt);
    const int V = pick(gen, 1, 3), T = pick(gen, 1, 4);
    const ModelParams p = random_small_model(gen(), V, 3, kInfiniteContext, 1.5);
    const Matrix x = random_features(gen, T, 3);
    std::vector<Sentence> corpus;
    for (int s = 0; s < 12; ++s) {
      Sentence sent;
      for (Symbol l : random_labels(gen, pick(gen, 1, 4), V)) sent.push_back(names[l - 1]);
      corpus.push_back(sent);
    }
    const NGramModel lm = train_ngram(corpus, {2, 0.5, true});
    const LmBinding binding =
        LmBinding::for_labels(lm, std::vector<std::string>(names.begin(), names.begin() + V));
    DecodeConfig cfg;
    cfg.beam_width = 1000000;
    cfg.max_labels_per_frame = 3;
    cfg.max_output_labels = 3;
    cfg.lambda1 = 2.5;
    cfg.lambda2 = fused ? 0.0 : 0.95;
    if (fused) {
      cfg.blank_scale = std::uniform_real_distribution<double>(0.2, 1.5)(gen);
      cfg.coverage = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    }
    const Hypothesis beam = fused ? beam_decode_fused(kind, x, p, binding, cfg).front()
                                  : beam_decode_hat(x, p, binding, nullptr, cfg).front();
    const Hypothesis exact = exhaustive_decode(kind, x, p, binding, cfg);
    if (beam.labels != exact.labels) ++(fused ? fused_miss : hat_miss);
  }
  return {hat_miss == 0 && fused_miss == 0,
          format("label-sequence mismatches vs exhaustive search: hat %d/%d, fused %d/%d "
                 "(T<=4, U_max<=3, |V|<=3)",
                 hat_miss, kInstances, fused_miss, kInstances)};
}

// 6, 7, 8 ---------------------------------------------------------------------

struct ToyRuns {
  GeneratedData data;
  Config config;
  TrainResult hat;
  std::string hat_log;
  double hat_seconds = 0.0;
};

TrainResult train_logged(const Config& c, const std::vector<Example>& ex, std::string* log) {
  std::ostringstream out, timing;
  TrainResult r = train_model(c, ex, {&out, &timing});
  if (log) *log = out.str();
  return r;
}

Outcome lambda2_direction(ToyRuns& toy) {
  const auto start = Clock::now();
  toy.config = Config{};
  toy.data = generate(toy.config.task);
  const auto ex = to_examples(toy.data.train);
  toy.hat = train_logged(toy.config, ex, &toy.hat_log);
  const LexiconTrie lex = toy.data.task.lexicon();
  const NGramModel lm = train_task_lm(toy.config, toy.data.lm_corpus, lex, toy.data.task.label_names);
  const LmBinding binding = bind_lm(&lm, toy.config.decode.mode, lex, toy.data.task.label_names);
  Config sweep_cfg = toy.config;
  sweep_cfg.lambda2_sweep = {0.0, 0.75, 0.95, 1.1};
  const auto sweep = lambda2_sweep(GridKind::kHat, toy.hat.params, toy.data.test, binding, lex,
                                   toy.data.task.label_names, sweep_cfg);
  const double elapsed = seconds_since(start);
  toy.hat_seconds = elapsed;
  const double base = sweep[0].first_best.rate();
  bool ok = elapsed < 600.0;
  std::string detail = format("lambda1 %.2f, %s LM; WER", sweep_cfg.decode.lambda1,
                              sweep_cfg.decode.mode == LmMode::kWord ? "word" : "label");
  for (const auto& pt : sweep) {
    detail += format(" @%.2f=%.2f%%", pt.lambda2, 100.0 * pt.first_best.rate());
    if (pt.lambda2 > 0 && pt.first_best.rate() > base) ok = false;
  }
  detail += format("; generate+train(%d epochs)+decode %.1f s (limit 600 s)", toy.config.train.epochs, elapsed);
  return {ok, detail};
}

Outcome context_sizes(const ToyRuns& toy) {
  const auto ex = to_examples(toy.data.train);
  Config c = toy.config;
  c.model.context = 0;
  const double c0 = train_logged(c, ex, nullptr).epochs.back().mean_loss;
  c.model.context = 2;
  const double c2 = train_logged(c, ex, nullptr).epochs.back().mean_loss;
  const double cinf = toy.hat.epochs.back().mean_loss;
  const double rel = std::abs(c2 - cinf) / cinf;
  return {c0 > c2 && rel < 0.15,
          format("final training loss c=0 %.4f, c=2 %.4f, c=inf %.4f; |c2-cinf|/cinf %.1f%% (limit 15%%)",
                 c0, c2, cinf, 100.0 * rel)};
}

Outcome prior_cost_logging(const ToyRuns& toy) {
  const auto ex = to_examples(toy.data.train);
  Config mtl = toy.config;
  mtl.train.mtl = true;
  Config rnnt = toy.config;
  rnnt.train.loss = GridKind::kRnnt;
  std::string mtl_log, rnnt_log;
  train_logged(mtl, ex, &mtl_log);
  train_logged(rnnt, ex, &rnnt_log);
  bool logged = true;
  std::vector<EpochStats> mtl_epochs;
  std::string detail;
  for (const auto& [name, log] : {std::pair<std::string, const std::string*>{"hat", &toy.hat_log},
                                  {"hat+mtl", &mtl_log},
                                  {"rnnt", &rnnt_log}}) {
    std::istringstream in(*log);
    const auto epochs = read_epoch_log(in);
    logged = logged && static_cast<int>(epochs.size()) == toy.config.train.epochs;
    for (const auto& e : epochs) logged = logged && std::isfinite(e.prior_cost);
    if (!epochs.empty())
      detail += format("%s prior_cost epoch1 %.3f epoch%d %.3f; ", name.c_str(), epochs.front().prior_cost,
                       epochs.back().epoch, epochs.back().prior_cost);
    if (name == "hat+mtl") mtl_epochs = epochs;
  }
  const bool decreased = mtl_epochs.size() >= 10 && mtl_epochs[9].prior_cost < mtl_epochs[0].prior_cost;
  detail += logged ? "logged every epoch for all three" : "missing epoch entries";
  return {logged && decreased, detail};
}

// 9 ---------------------------------------------------------------------------

Outcome ngram_checks(const ToyRuns& toy) {
  const LexiconTrie lex = toy.data.task.lexicon();
  double norm = 0.0, arpa = 0.0, ppl = 0.0;
  long contexts = 0;
  const std::vector<std::vector<Sentence>> corpora = {
      toy.data.lm_corpus, label_corpus(toy.data.lm_corpus, lex, toy.data.task.label_names)};
  for (const auto& corpus : corpora)
    for (int order = 1; order <= 4; ++order) {
      const NGramModel m = train_ngram(corpus, {order, 0.1, true});
      std::set<LmState> seen = {m.start_state()};
      for (const auto& s : corpus) {
        LmState st = m.start_state();
        for (const auto& w : s) seen.insert(st = m.score(st, w).second);
      }
      for (const auto& st : seen) {
        CompensatedSum<double> total;
        for (TokenId w : m.predictable()) total.add(std::exp(m.score(st, w).first));
        norm = std::max(norm, std::abs(total.value() - 1.0));
        ++contexts;
      }
      std::stringstream buf;
      save_arpa(buf, m);
      const NGramModel back = load_arpa(buf);
      for (std::size_t i = 0; i < corpus.size(); i += 7)
        arpa = std::max(arpa, std::abs(m.sentence_log_prob(corpus[i]) - back.sentence_log_prob(corpus[i])));
      ppl = std::max(ppl, std::abs(perplexity(m, corpus) - oracle::direct_perplexity(m, corpus)));
    }
  return {norm <= 1e-6 && arpa <= 1e-6 && ppl <= 1e-9,
          format("%ld observed contexts, max |sum - 1| %.2e (tol 1e-6); ARPA round trip %.2e (tol 1e-6); "
                 "perplexity vs direct %.2e (tol 1e-9)",
                 contexts, norm, arpa, ppl)};
}

// 10 --------------------------------------------------------------------------

int run(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "hat_acceptance_determinism";
  fs::remove_all(root);
  const std::string tool = HATCTL_PATH;
  bool ok = true;
  for (const char* run_name : {"a", "b"}) {
    const fs::path d = root / run_name;
    fs::create_directories(d);
    const std::string t = (d / "task").string(), m = (d / "model").string();
    ok = ok && run(tool + " selftest > " + (d / "selftest.txt").string()) == 0;
    ok = ok && run(tool + " generate --out " + t + " > /dev/null") == 0;
    ok = ok && run(tool + " train --task " + t + " --out " + m + " > /dev/null") == 0;
    ok = ok && run(tool + " train-lm --task " + t + " --out " + (d / "lm.arpa").string() + " > /dev/null") == 0;
    ok = ok && run(tool + " decode --checkpoint " + m + "/model.ckpt --task " + t + " --lm " +
                   (d / "lm.arpa").string() + " --out " + (d / "decode").string() + " > /dev/null") == 0;
  }
  if (!ok) return {false, "a pipeline command failed"};
  int files = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root / "a");
    if (rel.filename() == "timing.log") continue;
    ++files;
    if (slurp(entry.path()) != slurp(root / "b" / rel)) {
      ++differing;
      std::cerr << "differs: " << rel << '\n';
    }
  }
  return {differing == 0 && files > 0,
          format("two runs of selftest and generate/train/train-lm/decode: %d files compared "
                 "(train.log, model.ckpt, hyps, n-best, task data), %d differ",
                 files, differing)};
}

}  // namespace

int main() {
  ToyRuns toy;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"marginalization oracle", marginalization},
      {"gradient correctness", gradients},
      {"local normalization", local_normalization},
      {"ilm lemma and factorization", ilm_suite},
      {"decoder oracle equivalence", decoder_oracle},
      {"ilm weight direction on the toy task", [&] { return lambda2_direction(toy); }},
      {"finite context sizes", [&] { return context_sizes(toy); }},
      {"prior cost instrumentation", [&] { return prior_cost_logging(toy); }},
      {"n-gram LM", [&] { return ngram_checks(toy); }},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %zu of %zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
