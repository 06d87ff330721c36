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

// Exact gradients of the per-utterance training objective
//
//   sequence loss + mtl_weight * (-log P_ILM(Y))
//
// Edge occupancies come from the alpha/beta recursions; the chain rule then
// runs through the sigmoid/softmax heads, the joint network, the projections
// and both recurrences.

#pragma once

#include "hat/ilm.hpp"
#include "hat/loss.hpp"
#include "hat/network.hpp"
#include "hat/posterior.hpp"

namespace hat {

struct ObjectiveResult {
  double sequence_loss = 0.0;  // -log P(Y|X)
  double prior_loss = 0.0;     // -log P_ILM(Y), reported even when unweighted
  double objective = 0.0;      // sequence_loss + mtl_weight * prior_loss
  LossResult<double> forward;
  GradientSet grads;
};

/// d(sequence loss)/d(blank logits) and d/d(label scores) for the given
/// grid kind. Exposed for testing against finite differences on raw scores.
struct ScoreGradients {
  Matrix blank;   // T x (U+1)
  Matrix labels;  // T*(U+1) x |V|
};
ScoreGradients score_gradients(GridKind kind, const JointScores<double>& scores,
                               const LabelSeq& labels,
                               LossResult<double>* forward = nullptr);

ObjectiveResult objective_gradients(GridKind kind, const Matrix& features,
                                    const LabelSeq& labels,
                                    const ModelParams& params,
                                    double mtl_weight = 0.0);

inline ObjectiveResult hat_gradients(const Matrix& features,
                                     const LabelSeq& labels,
                                     const ModelParams& params,
                                     double mtl_weight = 0.0) {
  return objective_gradients(GridKind::kHat, features, labels, params,
                             mtl_weight);
}

/// Objective value only (no gradients).
double objective_value(GridKind kind, const Matrix& features,
                       const LabelSeq& labels, const ModelParams& params,
                       double mtl_weight = 0.0);

}  // namespace hat
