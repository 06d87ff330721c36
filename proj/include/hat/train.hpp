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

// Minibatch SGD on the sequence loss plus the optional weighted prior loss.
//
// The training log has one line per step and one per epoch:
//
//   step <n> epoch <e> loss <mean> prior <mean> grad_norm <norm>
//   epoch <e> mean_loss <mean> prior_cost <cost>
//
// Numbers are printed with %.10g so logs are byte-stable across runs. Wall
// time goes to a separate timing stream.

#pragma once

#include "hat/config.hpp"
#include "hat/ilm.hpp"
#include "hat/network.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace hat {

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;   // mean sequence loss over the epoch's steps
  double mean_prior = 0.0;  // mean -log P_ILM(Y) over the epoch's steps
  double prior_cost = 0.0;  // prior_cost of the training transcripts after the epoch
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> epochs;
};

struct TrainLogs {
  std::ostream* log = nullptr;
  std::ostream* timing = nullptr;
};

/// Scales `grads` so that its global norm is at most max_norm (0 disables).
/// Returns the norm before scaling.
double clip_global_norm(GradientSet& grads, double max_norm);

/// Trains from ModelParams::random(config.model). Throws NumericError on a
/// non-finite loss or gradient, naming the step.
TrainResult train_model(const Config& config, std::span<const Example> data,
                        const TrainLogs& logs = {});

/// Continues training from `init`.
TrainResult train_from(ModelParams init, const Config& config,
                       std::span<const Example> data, const TrainLogs& logs = {});

/// Mean sequence loss of the data under `params`.
double mean_loss(GridKind kind, std::span<const Example> data, const ModelParams& params);

}  // namespace hat
