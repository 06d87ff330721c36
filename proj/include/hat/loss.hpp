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

// Sequence losses: -log P(Y|X) summed over every alignment path.
//
// The dynamic programs are written once over a semiring; LogSemiring gives
// the marginal, MaxSemiring the best single path.

#pragma once

#include "hat/core.hpp"
#include "hat/lattice.hpp"
#include "hat/posterior.hpp"

#include <algorithm>
#include <string>

namespace hat {

struct LogSemiring {
  template <typename Scalar>
  static Scalar plus(Scalar a, Scalar b) {
    return log_add(a, b);
  }
};

struct MaxSemiring {
  template <typename Scalar>
  static Scalar plus(Scalar a, Scalar b) {
    return std::max(a, b);
  }
};

template <typename Scalar>
struct LossResult {
  Scalar neg_log_posterior = 0;
  MatrixX<Scalar> alpha;  // log forward scores
  MatrixX<Scalar> beta;   // log backward scores, empty unless requested
};

namespace detail {

inline void check_transducer(int frames, int positions, const LabelSeq& labels,
                             int vocab) {
  if (frames < 1) throw ArgumentError("loss needs at least one frame");
  check_shape(positions == static_cast<int>(labels.size()) + 1,
              "grid has " + std::to_string(positions) +
                  " label positions for " + std::to_string(labels.size()) +
                  " labels");
  for (Symbol y : labels) check_label(y, vocab);
}

}  // namespace detail

/// alpha(t,u): log score of reaching node (t,u) from (0,0); 0-based t.
template <typename Semiring = LogSemiring, typename Scalar>
MatrixX<Scalar> transducer_alpha(const LocalPosteriorGrid<Scalar>& grid,
                                 const LabelSeq& labels) {
  const int T = grid.frames(), P = grid.positions();
  detail::check_transducer(T, P, labels, grid.vocab());
  MatrixX<Scalar> alpha =
      MatrixX<Scalar>::Constant(T, P, log_zero<Scalar>());
  alpha(0, 0) = 0;
  for (int t = 0; t < T; ++t)
    for (int u = 0; u < P; ++u) {
      if (t == 0 && u == 0) continue;
      Scalar a = log_zero<Scalar>();
      if (t > 0) a = alpha(t - 1, u) + grid.blank_edge(t - 1, u);
      if (u > 0)
        a = Semiring::plus(a, alpha(t, u - 1) +
                                  grid.label_edge(t, u - 1, labels[u - 1]));
      alpha(t, u) = a;
    }
  return alpha;
}

/// beta(t,u): log score of reaching (T-1,U) from (t,u).
template <typename Semiring = LogSemiring, typename Scalar>
MatrixX<Scalar> transducer_beta(const LocalPosteriorGrid<Scalar>& grid,
                                const LabelSeq& labels) {
  const int T = grid.frames(), P = grid.positions();
  detail::check_transducer(T, P, labels, grid.vocab());
  MatrixX<Scalar> beta = MatrixX<Scalar>::Constant(T, P, log_zero<Scalar>());
  beta(T - 1, P - 1) = 0;
  for (int t = T - 1; t >= 0; --t)
    for (int u = P - 1; u >= 0; --u) {
      if (t == T - 1 && u == P - 1) continue;
      Scalar b = log_zero<Scalar>();
      if (t < T - 1) b = beta(t + 1, u) + grid.blank_edge(t, u);
      if (u < P - 1)
        b = Semiring::plus(b, beta(t, u + 1) + grid.label_edge(t, u, labels[u]));
      beta(t, u) = b;
    }
  return beta;
}

template <typename Semiring = LogSemiring, typename Scalar>
LossResult<Scalar> transducer_loss(const LocalPosteriorGrid<Scalar>& grid,
                                   const LabelSeq& labels,
                                   bool with_beta = false) {
  LossResult<Scalar> r;
  r.alpha = transducer_alpha<Semiring>(grid, labels);
  r.neg_log_posterior = -r.alpha(grid.frames() - 1, grid.positions() - 1);
  if (with_beta) r.beta = transducer_beta<Semiring>(grid, labels);
  return r;
}

template <typename Scalar>
LossResult<Scalar> hat_loss(const LocalPosteriorGrid<Scalar>& grid,
                            const LabelSeq& labels, bool with_beta = false) {
  if (grid.kind != GridKind::kHat) throw ArgumentError("hat_loss needs a HAT grid");
  return transducer_loss(grid, labels, with_beta);
}

template <typename Scalar>
LossResult<Scalar> rnnt_loss(const LocalPosteriorGrid<Scalar>& grid,
                             const LabelSeq& labels, bool with_beta = false) {
  if (grid.kind != GridKind::kRnnt)
    throw ArgumentError("rnnt_loss needs an RNNT grid");
  return transducer_loss(grid, labels, with_beta);
}

// CTC ------------------------------------------------------------------------
//
// States run over the blank-augmented sequence b y1 b y2 ... yU b
// (2U+1 states). alpha(t,s) includes the emission at frame t; beta(t,s)
// covers frames t+1..T-1 only.

namespace detail {

inline Symbol ctc_state_symbol(const LabelSeq& labels, int s) {
  return (s % 2 == 0) ? kBlank : labels[s / 2];
}

template <typename Scalar>
Scalar ctc_emit(const LocalPosteriorGrid<Scalar>& grid, int t, Symbol s) {
  return s == kBlank ? grid.blank_edge(t, 0) : grid.label_edge(t, 0, s);
}

// Whether state s may be entered from s-2 (skipping a blank).
inline bool ctc_can_skip(const LabelSeq& labels, int s) {
  return s >= 2 && s % 2 == 1 && labels[s / 2] != labels[s / 2 - 1];
}

template <typename Scalar>
void check_ctc(const LocalPosteriorGrid<Scalar>& grid, const LabelSeq& labels) {
  if (grid.kind != GridKind::kCtc) throw ArgumentError("ctc_loss needs a CTC grid");
  if (grid.frames() < 1) throw ArgumentError("loss needs at least one frame");
  for (Symbol y : labels) check_label(y, grid.vocab());
  if (grid.frames() < min_ctc_frames(labels))
    throw InfeasibleError("CTC needs " + std::to_string(min_ctc_frames(labels)) +
                          " frames for this label sequence, got " +
                          std::to_string(grid.frames()));
}

}  // namespace detail

template <typename Semiring = LogSemiring, typename Scalar>
MatrixX<Scalar> ctc_alpha(const LocalPosteriorGrid<Scalar>& grid,
                          const LabelSeq& labels) {
  detail::check_ctc(grid, labels);
  const int T = grid.frames(), S = 2 * static_cast<int>(labels.size()) + 1;
  MatrixX<Scalar> alpha = MatrixX<Scalar>::Constant(T, S, log_zero<Scalar>());
  alpha(0, 0) = detail::ctc_emit(grid, 0, kBlank);
  if (S > 1) alpha(0, 1) = detail::ctc_emit(grid, 0, labels[0]);
  for (int t = 1; t < T; ++t)
    for (int s = 0; s < S; ++s) {
      Scalar a = alpha(t - 1, s);
      if (s >= 1) a = Semiring::plus(a, alpha(t - 1, s - 1));
      if (detail::ctc_can_skip(labels, s))
        a = Semiring::plus(a, alpha(t - 1, s - 2));
      alpha(t, s) =
          a + detail::ctc_emit(grid, t, detail::ctc_state_symbol(labels, s));
    }
  return alpha;
}

template <typename Semiring = LogSemiring, typename Scalar>
MatrixX<Scalar> ctc_beta(const LocalPosteriorGrid<Scalar>& grid,
                         const LabelSeq& labels) {
  detail::check_ctc(grid, labels);
  const int T = grid.frames(), S = 2 * static_cast<int>(labels.size()) + 1;
  MatrixX<Scalar> beta = MatrixX<Scalar>::Constant(T, S, log_zero<Scalar>());
  beta(T - 1, S - 1) = 0;
  if (S > 1) beta(T - 1, S - 2) = 0;
  for (int t = T - 2; t >= 0; --t)
    for (int s = 0; s < S; ++s) {
      auto next = [&](int s2) {
        return beta(t + 1, s2) +
               detail::ctc_emit(grid, t + 1, detail::ctc_state_symbol(labels, s2));
      };
      Scalar b = next(s);
      if (s + 1 < S) b = Semiring::plus(b, next(s + 1));
      if (s + 2 < S && detail::ctc_can_skip(labels, s + 2))
        b = Semiring::plus(b, next(s + 2));
      beta(t, s) = b;
    }
  return beta;
}

template <typename Semiring = LogSemiring, typename Scalar>
LossResult<Scalar> ctc_loss(const LocalPosteriorGrid<Scalar>& grid,
                            const LabelSeq& labels, bool with_beta = false) {
  LossResult<Scalar> r;
  r.alpha = ctc_alpha<Semiring>(grid, labels);
  const int T = grid.frames();
  const int S = static_cast<int>(r.alpha.cols());
  Scalar total = r.alpha(T - 1, S - 1);
  if (S > 1) total = Semiring::plus(total, r.alpha(T - 1, S - 2));
  r.neg_log_posterior = -total;
  if (with_beta) r.beta = ctc_beta<Semiring>(grid, labels);
  return r;
}

/// Dispatch on grid.kind.
template <typename Semiring = LogSemiring, typename Scalar>
Scalar sequence_log_posterior(const LocalPosteriorGrid<Scalar>& grid,
                              const LabelSeq& labels) {
  if (grid.kind == GridKind::kCtc)
    return -ctc_loss<Semiring>(grid, labels).neg_log_posterior;
  return -transducer_loss<Semiring>(grid, labels).neg_log_posterior;
}

// Oracles --------------------------------------------------------------------

/// Probability of one alignment path (transducer grids), probability domain.
template <typename Scalar>
Scalar path_probability(const LocalPosteriorGrid<Scalar>& grid,
                        const AlignmentPath& path) {
  Scalar log_p = 0;
  int t = 0, u = 0;
  for (Symbol s : path) {
    if (s == kBlank) {
      log_p += grid.blank_edge(t, u);
      ++t;
    } else {
      log_p += grid.label_edge(t, u, s);
      ++u;
    }
  }
  return std::exp(log_p);
}

/// -log of the literal sum over enumerated alignment paths, accumulated in
/// the probability domain. +inf when no path has mass.
template <typename Scalar>
Scalar brute_force_loss(const LocalPosteriorGrid<Scalar>& grid,
                        const LabelSeq& labels,
                        std::size_t max_edges = kDefaultPathCap,
                        std::size_t max_ctc_frames = kDefaultCtcFrameCap) {
  CompensatedSum<Scalar> total;
  if (grid.kind == GridKind::kCtc) {
    for (const auto& frames :
         enumerate_ctc_paths(grid.frames(), labels, max_ctc_frames)) {
      Scalar log_p = 0;
      for (int t = 0; t < grid.frames(); ++t)
        log_p += detail::ctc_emit(grid, t, frames[t]);
      total.add(std::exp(log_p));
    }
  } else {
    const LatticeDims dims{grid.frames(), static_cast<int>(labels.size())};
    detail::check_transducer(grid.frames(), grid.positions(), labels,
                             grid.vocab());
    for (const auto& path : enumerate_paths(dims, labels, max_edges))
      total.add(path_probability(grid, path));
  }
  return -std::log(total.value());
}

}  // namespace hat
