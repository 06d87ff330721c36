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

#include "hat/train.hpp"

#include "hat/gradients.hpp"
#include "hat/parallel.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

namespace hat {

namespace {

void log_line(std::ostream* os, const char* fmt, auto... args) {
  if (!os) return;
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  *os << buf << '\n';
}

std::vector<LabelSeq> labels_of(std::span<const Example> data) {
  std::vector<LabelSeq> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(ex.labels);
  return out;
}

void sgd_step(ModelParams& params, GradientSet& velocity, const GradientSet& grads,
              double lr, double momentum) {
  velocity *= momentum;
  velocity += grads;
  GradientSet step = velocity;
  step *= -lr;
  params += step;
}

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  GradientSet m, v;
  long long t = 0;

  explicit AdamState(const ModelConfig& c) : m(ModelParams::zeros(c)), v(ModelParams::zeros(c)) {}

  void apply(ModelParams& params, const GradientSet& grads, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    auto p = params.tensors();
    const auto g = grads.tensors();
    auto mt = m.tensors();
    auto vt = v.tensors();
    for (std::size_t k = 0; k < p.size(); ++k)
      for (Eigen::Index i = 0; i < p[k].size(); ++i) {
        const double gi = g[k].data[i];
        mt[k].data[i] = kBeta1 * mt[k].data[i] + (1 - kBeta1) * gi;
        vt[k].data[i] = kBeta2 * vt[k].data[i] + (1 - kBeta2) * gi * gi;
        p[k].data[i] -= lr * (mt[k].data[i] / c1) / (std::sqrt(vt[k].data[i] / c2) + kEps);
      }
  }
};

}  // namespace

double clip_global_norm(GradientSet& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (max_norm > 0 && norm > max_norm) grads *= max_norm / norm;
  return norm;
}

TrainResult train_model(const Config& config, std::span<const Example> data,
                        const TrainLogs& logs) {
  return train_from(ModelParams::random(config.model), config, data, logs);
}

TrainResult train_from(ModelParams init, const Config& config,
                       std::span<const Example> data, const TrainLogs& logs) {
  config.validate();
  const auto& tc = config.train;
  const double mu = tc.effective_mtl_weight();
  TrainResult result{std::move(init), {}};
  ModelParams& params = result.params;
  const int n = static_cast<int>(data.size());
  if (n == 0 && tc.epochs > 0) throw ArgumentError("training set is empty");
  for (const auto& ex : data)
    check_shape(ex.features.cols() == params.config.feat_dim,
                "training features have " + std::to_string(ex.features.cols()) +
                    " columns, model expects " + std::to_string(params.config.feat_dim));
  const auto transcripts = labels_of(data);

  std::mt19937_64 gen(tc.seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  GradientSet velocity = ModelParams::zeros(params.config);
  AdamState adam(params.config);
  long long step = 0;
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), gen);
    CompensatedSum<double> epoch_loss, epoch_prior;
    for (int begin = 0; begin < n; begin += tc.batch_size) {
      const int end = std::min(n, begin + tc.batch_size);
      const int b = end - begin;
      std::vector<ObjectiveResult> parts(b);
      parallel_for(b, [&](int i) {
        const auto& ex = data[order[begin + i]];
        parts[i] = objective_gradients(tc.loss, ex.features, ex.labels, params, mu);
      });
      GradientSet grads = ModelParams::zeros(params.config);
      double loss = 0.0, prior = 0.0;
      for (const auto& part : parts) {
        grads += part.grads;
        loss += part.sequence_loss;
        prior += part.prior_loss;
      }
      grads *= 1.0 / b;
      loss /= b;
      prior /= b;
      ++step;
      if (!std::isfinite(loss) || !grads.finite())
        throw NumericError("non-finite loss or gradient at step " + std::to_string(step) +
                           " (epoch " + std::to_string(epoch) + ")");
      const double norm = clip_global_norm(grads, tc.clip_norm);
      if (tc.optimizer == Optimizer::kAdam)
        adam.apply(params, grads, tc.learning_rate);
      else
        sgd_step(params, velocity, grads, tc.learning_rate, tc.momentum);
      epoch_loss.add(loss * b);
      epoch_prior.add(prior * b);
      log_line(logs.log, "step %lld epoch %d loss %.10g prior %.10g grad_norm %.10g", step,
               epoch, loss, prior, norm);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = epoch_loss.value() / n;
    stats.mean_prior = epoch_prior.value() / n;
    stats.prior_cost = prior_cost(transcripts, params);
    result.epochs.push_back(stats);
    log_line(logs.log, "epoch %d mean_loss %.10g prior_cost %.10g", epoch, stats.mean_loss,
             stats.prior_cost);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
    log_line(logs.timing, "epoch %d wall_ms %lld", epoch, static_cast<long long>(ms));
  }
  return result;
}

double mean_loss(GridKind kind, std::span<const Example> data, const ModelParams& params) {
  if (data.empty()) throw ArgumentError("mean_loss of an empty set");
  std::vector<double> losses(data.size());
  parallel_for(static_cast<int>(data.size()), [&](int i) {
    losses[i] = objective_value(kind, data[i].features, data[i].labels, params);
  });
  CompensatedSum<double> s;
  for (double l : losses) s.add(l);
  return s.value() / static_cast<double>(data.size());
}

}  // namespace hat
