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

#include "hat/selftest.hpp"

#include "hat/decoder.hpp"
#include "hat/gradients.hpp"
#include "hat/ilm.hpp"
#include "hat/lattice.hpp"
#include "hat/loss.hpp"
#include "hat/ngram.hpp"
#include "hat/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <vector>

namespace hat {

ModelParams random_small_model(std::uint64_t seed, int vocab, int feat_dim, int context,
                               double scale) {
  ModelConfig c;
  c.vocab = vocab;
  c.feat_dim = feat_dim;
  c.embed_dim = 3;
  c.enc_hidden = 4;
  c.dec_hidden = 4;
  c.joint_dim = 5;
  c.context = context;
  c.seed = seed;
  c.init_scale = scale;
  return ModelParams::random(c);
}

Matrix random_features(std::mt19937_64& gen, int frames, int feat_dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(frames, feat_dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(gen);
  return x;
}

LabelSeq random_labels(std::mt19937_64& gen, int length, int vocab) {
  std::uniform_int_distribution<int> pick(1, vocab);
  LabelSeq y(length);
  for (auto& s : y) s = pick(gen);
  return y;
}

namespace {

using Gen = std::mt19937_64;

int uniform_int(Gen& gen, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(gen);
}

SelftestCheck check_marginalization(Gen& gen) {
  SelftestCheck c{"marginalization.transducer", 0.0, 1e-8};
  for (int i = 0; i < 40; ++i) {
    const int V = uniform_int(gen, 1, 4), T = uniform_int(gen, 1, 5), U = uniform_int(gen, 0, 3);
    const ModelParams p = random_small_model(gen(), V);
    const Matrix x = random_features(gen, T, p.config.feat_dim);
    const LabelSeq y = random_labels(gen, U, V);
    const Activations acts = forward(x, y, p);
    for (const auto& g : {hat_grid(acts, p), rnnt_grid(acts, p)}) {
      const double dp = transducer_loss(g, y).neg_log_posterior;
      c.value = std::max(c.value, std::abs(dp - brute_force_loss(g, y)));
    }
  }
  return c;
}

SelftestCheck check_ctc_marginalization(Gen& gen) {
  SelftestCheck c{"marginalization.ctc", 0.0, 1e-8};
  for (int i = 0; i < 40; ++i) {
    const int V = uniform_int(gen, 1, 4), T = uniform_int(gen, 1, 8);
    const ModelParams p = random_small_model(gen(), V);
    const Matrix x = random_features(gen, T, p.config.feat_dim);
    LabelSeq y = random_labels(gen, uniform_int(gen, 0, 3), V);
    while (min_ctc_frames(y) > T) y.pop_back();
    const auto g = ctc_grid(encode(x, p), p);
    c.value = std::max(c.value,
                       std::abs(ctc_loss(g, y).neg_log_posterior - brute_force_loss(g, y)));
  }
  return c;
}

SelftestCheck check_local_normalization(Gen& gen) {
  SelftestCheck c{"local_normalization.hat", 0.0, 1e-12};
  for (int i = 0; i < 20; ++i) {
    const int V = uniform_int(gen, 1, 6), T = uniform_int(gen, 1, 5), U = uniform_int(gen, 0, 3);
    const ModelParams p = random_small_model(gen(), V);
    const LabelSeq y = random_labels(gen, U, V);
    const auto g = hat_grid(forward(random_features(gen, T, p.config.feat_dim), y, p), p);
    for (int t = 0; t < T; ++t)
      for (int u = 0; u <= U; ++u) {
        double total = std::exp(g.blank_edge(t, u));
        for (int k = 0; k < V; ++k) total += std::exp(g.label_edge(t, u, Alphabet::label_at(k)));
        c.value = std::max(c.value, std::abs(total - 1.0));
      }
  }
  return c;
}

SelftestCheck check_gradients(GridKind kind, double mtl, const std::string& name) {
  SelftestCheck c{name, 0.0, 1e-4};
  Gen gen(47);
  const ModelParams p0 = random_small_model(47, 3);
  const Matrix x = random_features(gen, 4, p0.config.feat_dim);
  const LabelSeq y = {1, 3};
  ModelParams p = p0;
  const ObjectiveResult r = objective_gradients(kind, x, y, p, mtl);
  auto params = p.tensors();
  const auto grads = r.grads.tensors();
  constexpr double kEps = 1e-5;
  for (std::size_t k = 0; k < params.size(); ++k)
    for (Eigen::Index i = 0; i < params[k].size(); ++i) {
      double& w = params[k].data[i];
      const double saved = w;
      w = saved + kEps;
      const double up = objective_value(kind, x, y, p, mtl);
      w = saved - kEps;
      const double down = objective_value(kind, x, y, p, mtl);
      w = saved;
      const double numeric = (up - down) / (2 * kEps);
      const double analytic = grads[k].data[i];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      c.value = std::max(c.value, std::abs(numeric - analytic) / scale);
    }
  return c;
}

SelftestCheck check_shift_invariance(Gen& gen) {
  SelftestCheck c{"ilm.shift_invariance", 0.0, 1e-12};
  for (int i = 0; i < 20; ++i) {
    const int V = uniform_int(gen, 2, 6);
    std::normal_distribution<double> normal(0.0, 3.0);
    Vector s(V);
    for (int k = 0; k < V; ++k) s(k) = normal(gen);
    const double shift = normal(gen) * 10;
    const Vector a = softmax(s), b = softmax((s.array() + shift).matrix());
    c.value = std::max(c.value, (a - b).cwiseAbs().maxCoeff());
  }
  return c;
}

SelftestCheck check_factorization(Gen& gen) {
  SelftestCheck c{"ilm.factorization_linear_joint", 0.0, 1e-9};
  for (int i = 0; i < 10; ++i) {
    const int V = uniform_int(gen, 2, 4);
    ModelParams p = random_small_model(gen(), V);
    p.config.activation = JointActivation::kIdentity;
    const LabelSeq y = random_labels(gen, uniform_int(gen, 0, 3), V);
    const Matrix x = random_features(gen, uniform_int(gen, 1, 5), p.config.feat_dim);
    c.value = std::max(c.value, factorization_residual(forward(x, y, p), p));
  }
  return c;
}

SelftestCheck check_decoder_oracle(Gen& gen, GridKind kind) {
  SelftestCheck c{std::string("decoder.oracle.") + to_string(kind), 0.0, 0.0};
  const std::vector<std::string> names = {"a", "b", "c"};
  for (int i = 0; i < 15; ++i) {
    const int V = uniform_int(gen, 1, 3), T = uniform_int(gen, 1, 4);
    const ModelParams p = random_small_model(gen(), V, 3, kInfiniteContext, 1.5);
    const Matrix x = random_features(gen, T, p.config.feat_dim);
    std::vector<Sentence> corpus;
    for (int s = 0; s < 12; ++s) {
      Sentence sent;
      for (Symbol l : random_labels(gen, uniform_int(gen, 1, 4), V))
        sent.push_back(names[Alphabet::index_of(l)]);
      corpus.push_back(sent);
    }
    const NGramModel lm = train_ngram(corpus, {2, 0.5, true});
    const LmBinding binding = LmBinding::for_labels(
        lm, std::vector<std::string>(names.begin(), names.begin() + V));
    DecodeConfig cfg;
    cfg.lambda1 = 2.5;
    cfg.lambda2 = kind == GridKind::kHat ? 0.95 : 0.0;
    cfg.coverage = kind == GridKind::kHat ? 0.0 : 0.3;
    cfg.beam_width = 100000;
    cfg.max_labels_per_frame = 3;
    cfg.max_output_labels = 3;
    const auto beam = beam_decode(kind, x, p, binding, nullptr, cfg).front();
    const auto exact = exhaustive_decode(kind, x, p, binding, cfg);
    if (beam.labels != exact.labels) c.value += 1.0;
  }
  return c;
}

SelftestCheck check_ngram(Gen& gen) {
  SelftestCheck c{"ngram.normalization_and_arpa", 0.0, 1e-6};
  const std::vector<std::string> words = {"x", "y", "z", "w"};
  std::vector<Sentence> corpus;
  for (int s = 0; s < 30; ++s) {
    Sentence sent;
    for (int k = uniform_int(gen, 1, 5); k > 0; --k) sent.push_back(words[uniform_int(gen, 0, 3)]);
    corpus.push_back(sent);
  }
  const NGramModel m = train_ngram(corpus, {3, 0.1, true});
  std::stringstream arpa;
  save_arpa(arpa, m);
  const NGramModel back = load_arpa(arpa);
  for (const auto& sent : corpus) {
    LmState st = m.start_state();
    for (std::size_t i = 0; i <= sent.size(); ++i) {
      double total = 0.0;
      for (TokenId w : m.predictable()) total += std::exp(m.score(st, w).first);
      c.value = std::max(c.value, std::abs(total - 1.0));
      if (i < sent.size()) st = m.score(st, m.id(sent[i])).second;
    }
    c.value = std::max(c.value, std::abs(m.sentence_log_prob(sent) - back.sentence_log_prob(sent)));
  }
  return c;
}

}  // namespace

bool run_selftest(std::ostream& out, std::uint64_t seed) {
  Gen gen(seed);
  std::vector<SelftestCheck> checks;
  checks.push_back(check_marginalization(gen));
  checks.push_back(check_ctc_marginalization(gen));
  checks.push_back(check_local_normalization(gen));
  checks.push_back(check_gradients(GridKind::kHat, 0.0, "gradients.hat"));
  checks.push_back(check_gradients(GridKind::kHat, 0.1, "gradients.hat_mtl"));
  checks.push_back(check_gradients(GridKind::kRnnt, 0.0, "gradients.rnnt"));
  checks.push_back(check_gradients(GridKind::kCtc, 0.0, "gradients.ctc"));
  checks.push_back(check_shift_invariance(gen));
  checks.push_back(check_factorization(gen));
  checks.push_back(check_decoder_oracle(gen, GridKind::kHat));
  checks.push_back(check_decoder_oracle(gen, GridKind::kRnnt));
  checks.push_back(check_decoder_oracle(gen, GridKind::kCtc));
  checks.push_back(check_ngram(gen));
  int failed = 0;
  char buf[160];
  for (const auto& c : checks) {
    std::snprintf(buf, sizeof buf, "%s %-34s %.3e <= %.0e", c.passed() ? "PASS" : "FAIL",
                  c.name.c_str(), c.value, c.tolerance);
    out << buf << '\n';
    failed += !c.passed();
  }
  out << (failed == 0 ? "selftest: all " + std::to_string(checks.size()) + " checks passed"
                      : "selftest: " + std::to_string(failed) + " of " +
                            std::to_string(checks.size()) + " checks failed")
      << '\n';
  return failed == 0;
}

}  // namespace hat
