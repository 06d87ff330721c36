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

// Local (per lattice cell) posteriors for HAT, RNNT and CTC.
//
// Everything is stored as natural-log probabilities. Cell (t, u) uses
// 0-based frame index t in [0, T) and label position u in [0, U].
//
//   HAT   blank edge  log b
//         label edge  log(1 - b) + log P(y)     P normalized over V
//   RNNT  one softmax over V and blank
//   CTC   as RNNT but without decoder input, rows repeated across u

#pragma once

#include "hat/core.hpp"
#include "hat/network.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace hat {

enum class GridKind { kHat, kRnnt, kCtc };

const char* to_string(GridKind kind);

/// Raw network outputs over a T x (U+1) grid.
template <typename Scalar>
struct JointScores {
  MatrixX<Scalar> blank;   // T x (U+1) blank logits
  MatrixX<Scalar> labels;  // T*(U+1) x |V| label scores, row t*(U+1)+u
  int frames() const { return static_cast<int>(blank.rows()); }
  int positions() const { return static_cast<int>(blank.cols()); }
  int vocab() const { return static_cast<int>(labels.cols()); }
};

template <typename Scalar>
struct LocalPosteriorGrid {
  GridKind kind = GridKind::kHat;
  MatrixX<Scalar> log_blank;       // T x (U+1)
  MatrixX<Scalar> log_label_mass;  // T x (U+1): log(1-b) for HAT, 0 otherwise
  MatrixX<Scalar> log_label;       // T*(U+1) x |V|

  int frames() const { return static_cast<int>(log_blank.rows()); }
  int positions() const { return static_cast<int>(log_blank.cols()); }
  int vocab() const { return static_cast<int>(log_label.cols()); }
  Eigen::Index cell(int t, int u) const {
    return static_cast<Eigen::Index>(t) * positions() + u;
  }

  Scalar blank_edge(int t, int u) const { return log_blank(t, u); }
  Scalar label_edge(int t, int u, Symbol y) const {
    return log_label_mass(t, u) + log_label(cell(t, u), Alphabet::index_of(y));
  }
  /// Edge log-probabilities at (t, u) over {blank} followed by V.
  VectorX<Scalar> edges(int t, int u) const {
    VectorX<Scalar> e(vocab() + 1);
    e(0) = log_blank(t, u);
    e.tail(vocab()) =
        log_label.row(cell(t, u)).transpose().array() + log_label_mass(t, u);
    return e;
  }
};

template <typename Scalar>
LocalPosteriorGrid<Scalar> hat_grid(const JointScores<Scalar>& s) {
  LocalPosteriorGrid<Scalar> g;
  g.kind = GridKind::kHat;
  g.log_blank = s.blank.unaryExpr([](Scalar x) { return log_sigmoid(x); });
  g.log_label_mass = s.blank.unaryExpr([](Scalar x) { return log_sigmoid(-x); });
  g.log_label.resize(s.labels.rows(), s.labels.cols());
  for (Eigen::Index r = 0; r < s.labels.rows(); ++r)
    g.log_label.row(r) = log_softmax(s.labels.row(r).transpose()).transpose();
  return g;
}

template <typename Scalar>
LocalPosteriorGrid<Scalar> rnnt_grid(const JointScores<Scalar>& s) {
  LocalPosteriorGrid<Scalar> g;
  g.kind = GridKind::kRnnt;
  const int T = s.frames(), P = s.positions(), V = s.vocab();
  g.log_blank.resize(T, P);
  g.log_label_mass = MatrixX<Scalar>::Zero(T, P);
  g.log_label.resize(s.labels.rows(), V);
  VectorX<Scalar> logits(V + 1);
  for (int t = 0; t < T; ++t)
    for (int u = 0; u < P; ++u) {
      const Eigen::Index r = static_cast<Eigen::Index>(t) * P + u;
      logits(0) = s.blank(t, u);
      logits.tail(V) = s.labels.row(r).transpose();
      const VectorX<Scalar> lp = log_softmax(logits);
      g.log_blank(t, u) = lp(0);
      g.log_label.row(r) = lp.tail(V).transpose();
    }
  return g;
}

/// `s` holds per-frame scores (positions() == 1); the result repeats them
/// over `positions` label positions.
template <typename Scalar>
LocalPosteriorGrid<Scalar> ctc_grid(const JointScores<Scalar>& s,
                                    int positions = 1) {
  check_shape(s.positions() == 1, "CTC scores must not depend on u");
  LocalPosteriorGrid<Scalar> frame = rnnt_grid(s);
  LocalPosteriorGrid<Scalar> g;
  g.kind = GridKind::kCtc;
  const int T = s.frames(), V = s.vocab();
  g.log_blank = frame.log_blank.replicate(1, positions);
  g.log_label_mass = MatrixX<Scalar>::Zero(T, positions);
  g.log_label.resize(static_cast<Eigen::Index>(T) * positions, V);
  for (int t = 0; t < T; ++t)
    for (int u = 0; u < positions; ++u)
      g.log_label.row(static_cast<Eigen::Index>(t) * positions + u) =
          frame.log_label.row(t);
  return g;
}

/// Scales the blank probability of every cell by `beta` and renormalizes
/// (RNNT and CTC grids).
template <typename Scalar>
LocalPosteriorGrid<Scalar> rescale_blank(const LocalPosteriorGrid<Scalar>& in,
                                         Scalar beta) {
  if (!(beta > 0)) throw ArgumentError("blank scale must be positive");
  if (in.kind == GridKind::kHat)
    throw ArgumentError("blank rescaling applies to RNNT/CTC grids");
  LocalPosteriorGrid<Scalar> g = in;
  const Scalar log_beta = std::log(beta);
  for (int t = 0; t < in.frames(); ++t)
    for (int u = 0; u < in.positions(); ++u) {
      const Eigen::Index r = in.cell(t, u);
      VectorX<Scalar> e(in.vocab() + 1);
      e(0) = in.log_blank(t, u) + log_beta;
      e.tail(in.vocab()) = in.log_label.row(r).transpose();
      const Scalar z = log_sum_exp(e);
      g.log_blank(t, u) = e(0) - z;
      g.log_label.row(r) = (e.tail(in.vocab()).array() - z).transpose();
    }
  return g;
}

/// Edge log-probabilities at one cell, computed from activations. Used by the
/// decoder, which never materializes the grid.
struct CellPosterior {
  double log_blank;
  Vector log_label_edges;  // |V| entries, label-edge log-probabilities
};

CellPosterior hat_cell(const Vector& f, const Vector& g,
                       const ModelParams& params);
CellPosterior rnnt_cell(const Vector& f, const Vector& g,
                        const ModelParams& params);

// Network-facing constructors ------------------------------------------------

JointScores<double> joint_scores(const Activations& acts,
                                 const ModelParams& params);
LocalPosteriorGrid<double> hat_grid(const Activations& acts,
                                    const ModelParams& params);
LocalPosteriorGrid<double> rnnt_grid(const Activations& acts,
                                     const ModelParams& params);
/// Per-frame scores from encoder rows alone; repeated over `positions`.
LocalPosteriorGrid<double> ctc_grid(const Matrix& enc, const ModelParams& params,
                                    int positions = 1);
LocalPosteriorGrid<double> make_grid(GridKind kind, const Activations& acts,
                                     const ModelParams& params);

/// Debug dump: header `t u <b> <names...>` then one line per cell of
/// edge log-probabilities, tab separated.
void write_grid(std::ostream& os, const LocalPosteriorGrid<double>& grid,
                const std::vector<std::string>& label_names = {});

}  // namespace hat
