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


#include "hat/posterior.hpp"
#include "hat/selftest.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <random>
#include <sstream>

using namespace hat;

namespace {

double cell_total(const LocalPosteriorGrid<double>& g, int t, int u) {
  return g.edges(t, u).array().exp().sum();
}

}  // namespace

TEST_SUITE("posterior") {

TEST_CASE("zero parameters give b = 0.5 and uniform labels") {
  ModelConfig c;
  c.vocab = 4;
  const ModelParams p = ModelParams::zeros(c);
  const Activations acts = forward(Matrix::Zero(3, c.feat_dim), {1, 2}, p);
  const auto h = hat_grid(acts, p);
  const auto r = rnnt_grid(acts, p);
  const auto ctc = ctc_grid(acts.enc, p);
  for (int t = 0; t < 3; ++t) {
    CHECK(std::exp(ctc.blank_edge(t, 0)) == doctest::Approx(0.2).epsilon(1e-15));
    for (int u = 0; u < 3; ++u) {
      CHECK(std::exp(h.blank_edge(t, u)) == doctest::Approx(0.5).epsilon(1e-15));
      CHECK(std::exp(r.blank_edge(t, u)) == doctest::Approx(0.2).epsilon(1e-15));
      for (Symbol y = 1; y <= 4; ++y) {
        CHECK(std::exp(h.label_edge(t, u, y)) == doctest::Approx(0.5 / 4).epsilon(1e-15));
        CHECK(std::exp(r.label_edge(t, u, y)) == doctest::Approx(0.2).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("grids match a direct recomputation on seed 47") {
  const ModelParams p = random_small_model(47, 3);
  std::mt19937_64 gen(47);
  const Matrix x = random_features(gen, 2, p.config.feat_dim);
  const LabelSeq y = {2};
  const Activations acts = forward(x, y, p);
  const auto f = oracle::encoder(x, p);
  const auto g = oracle::decoder(y, p);
  for (GridKind kind : {GridKind::kHat, GridKind::kRnnt}) {
    const auto grid = make_grid(kind, acts, p);
    for (int t = 0; t < 2; ++t)
      for (int u = 0; u < 2; ++u) {
        const auto expect = oracle::cell(kind, f[t], g[u], p);
        const Vector e = grid.edges(t, u);
        for (int k = 0; k <= 3; ++k) CHECK(std::abs(std::exp(e(k)) - expect[k]) < 1e-14);
      }
  }
  const auto ctc = ctc_grid(acts.enc, p);
  const std::vector<double> zero(p.config.joint_dim, 0.0);
  for (int t = 0; t < 2; ++t) {
    const auto expect = oracle::cell(GridKind::kRnnt, f[t], zero, p);
    const Vector e = ctc.edges(t, 0);
    for (int k = 0; k <= 3; ++k) CHECK(std::abs(std::exp(e(k)) - expect[k]) < 1e-14);
  }
}

TEST_CASE("RNNT cells depend only on the collapsed prefix") {
  const ModelParams p = random_small_model(5, 3);
  std::mt19937_64 gen(5);
  const Matrix x = random_features(gen, 4, p.config.feat_dim);
  const Matrix enc = encode(x, p);
  const DecoderState s = advance_decoder(advance_decoder(initial_decoder_state(p), 2, p), 1, p);
  // Prefixes [b, 2, b, 1] and [2, 1, b, b] both reach (t = 3, label history [2, 1]).
  const Matrix dec = decode_history({2, 1}, p);
  const CellPosterior c1 = rnnt_cell(enc.row(2).transpose(), dec.row(2).transpose(), p);
  const CellPosterior c2 = rnnt_cell(enc.row(2).transpose(), s.output, p);
  CHECK(c1.log_blank == c2.log_blank);
  CHECK(c1.log_label_edges == c2.log_label_edges);
}

TEST_CASE("CTC grid is constant across label positions") {
  const ModelParams p = random_small_model(6, 3);
  std::mt19937_64 gen(6);
  const auto g = ctc_grid(encode(random_features(gen, 3, p.config.feat_dim), p), p, 4);
  for (int t = 0; t < 3; ++t)
    for (int u = 1; u < 4; ++u) CHECK(g.edges(t, u) == g.edges(t, 0));
}

TEST_CASE("blank rescaling") {
  const ModelParams p = random_small_model(7, 3);
  std::mt19937_64 gen(7);
  const Activations acts = forward(random_features(gen, 3, p.config.feat_dim), {1}, p);
  const auto r = rnnt_grid(acts, p);
  const auto same = rescale_blank(r, 1.0);
  CHECK((same.log_blank - r.log_blank).cwiseAbs().maxCoeff() < 1e-15);
  const auto low = rescale_blank(r, 0.1);
  for (int t = 0; t < 3; ++t)
    for (int u = 0; u < 2; ++u) {
      CHECK(low.log_blank(t, u) < r.log_blank(t, u));
      CHECK(std::abs(cell_total(low, t, u) - 1.0) < 1e-12);
    }
  CHECK_THROWS_AS(rescale_blank(r, 0.0), ArgumentError);
  CHECK_THROWS_AS(rescale_blank(hat_grid(acts, p), 0.5), ArgumentError);
}

TEST_CASE("grid dump has a header and one line per cell") {
  const ModelParams p = random_small_model(8, 2);
  std::mt19937_64 gen(8);
  const auto g = hat_grid(forward(random_features(gen, 2, p.config.feat_dim), {1}, p), p);
  std::ostringstream os;
  write_grid(os, g, {"a", "b"});
  std::istringstream in(os.str());
  std::string line;
  int lines = 0;
  std::getline(in, line);
  CHECK(line.find("<b>") != std::string::npos);
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 4);
}

TEST_CASE("property: per-cell normalization") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 30; ++trial) {
    const int V = 1 + trial % 5, T = 1 + trial % 4, U = trial % 3;
    const ModelParams p = random_small_model(gen(), V, 3, kInfiniteContext, 2.0);
    const LabelSeq y = random_labels(gen, U, V);
    const Activations acts = forward(random_features(gen, T, 3), y, p);
    for (GridKind kind : {GridKind::kHat, GridKind::kRnnt, GridKind::kCtc}) {
      const auto g = make_grid(kind, acts, p);
      for (int t = 0; t < T; ++t)
        for (int u = 0; u <= U; ++u) {
          CHECK(std::abs(cell_total(g, t, u) - 1.0) < 1e-12);
          const double b = std::exp(g.blank_edge(t, u));
          CHECK(b >= 0.0);
          CHECK(b <= 1.0);
          if (kind == GridKind::kHat)
            CHECK(std::abs(g.log_label.row(g.cell(t, u)).array().exp().sum() - 1.0) < 1e-12);
        }
    }
  }
}

TEST_CASE("property: raising the blank bias raises every HAT blank probability") {
  std::mt19937_64 gen(22);
  for (int trial = 0; trial < 10; ++trial) {
    ModelParams p = random_small_model(gen(), 3);
    const Activations acts = forward(random_features(gen, 3, 3), {1, 3}, p);
    const auto before = hat_grid(acts, p);
    p.blank_bias += 0.25;
    const auto after = hat_grid(acts, p);
    CHECK((after.log_blank.array() > before.log_blank.array()).all());
  }
}

TEST_CASE("property: log-domain storage round-trips") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> expo(-690.0, 0.0);
  for (int i = 0; i < 1000; ++i) {
    const double prob = std::exp(expo(gen));
    CHECK(std::abs(std::exp(std::log(prob)) - prob) <= 1e-15 * prob);
  }
}

}  // TEST_SUITE
