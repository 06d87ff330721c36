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

// Internal language model: the label head scored on decoder activations
// alone, P(y | y_0:u) = softmax(J(g_u)).

#pragma once

#include "hat/core.hpp"
#include "hat/network.hpp"

#include <ostream>
#include <span>
#include <vector>

namespace hat {

/// A transcript with its acoustic features.
struct Example {
  Matrix features;  // T x D_in
  LabelSeq labels;
};

/// Takes only g_u, so the encoder cannot leak in.
Vector ilm_local(const Vector& g, const ModelParams& params);
Vector ilm_local_log(const Vector& g, const ModelParams& params);

struct IlmScore {
  Matrix local;  // U x |V|; row u is P(. | y_0:u)
  double sequence_log_prob = 0.0;
};

IlmScore ilm_score(const LabelSeq& labels, const ModelParams& params);
/// log P_ILM(Y) = sum_u log P(y_{u+1} | y_0:u).
double ilm_sequence(const LabelSeq& labels, const ModelParams& params);

/// Mean of -log P_ILM(y) over transcripts.
double prior_cost(std::span<const LabelSeq> transcripts,
                  const ModelParams& params);

/// -sum_u log P_ILM(y_{u+1} | y_0:u) from precomputed decoder rows.
double mtl_prior_loss(const Matrix& dec, const LabelSeq& labels,
                      const ModelParams& params);

// Joint-input statistics ------------------------------------------------------

struct LinearityStats {
  Vector mean;
  Vector stddev;
  double linear_range_fraction = 0.0;
  double threshold = 1.0;
  long long count = 0;
};

/// Streaming per-dimension mean and variance (Welford); partial
/// accumulators from disjoint shards merge exactly.
class LinearityAccumulator {
 public:
  explicit LinearityAccumulator(int dim);
  void add(const Vector& x);
  void merge(const LinearityAccumulator& other);
  LinearityStats finish(double threshold) const;
  long long count() const { return count_; }

 private:
  long long count_ = 0;
  Vector mean_;
  Vector m2_;
};

/// Statistics of f_t + g_u over every lattice cell of every example.
LinearityStats linearity_stats(std::span<const Example> data,
                               const ModelParams& params,
                               double threshold = 1.0);

/// Largest violation of the identity that label-posterior log-odds minus
/// ILM log-odds do not depend on u. Zero when J is additive.
double factorization_residual(const Activations& acts,
                              const ModelParams& params);

/// Tab-separated: one `d mean stddev` line per dimension, then a summary.
void write_linearity(std::ostream& os, const LinearityStats& stats,
                     double max_residual);

}  // namespace hat
