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

#include "hat/ilm.hpp"

#include "hat/posterior.hpp"

#include <algorithm>
#include <cstdio>

namespace hat {

Vector ilm_local_log(const Vector& g, const ModelParams& params) {
  check_shape(g.size() == params.config.joint_dim, "ILM input width");
  return log_softmax(params.joint_out *
                         joint_activation(g, params.config.activation) +
                     params.joint_bias);
}

Vector ilm_local(const Vector& g, const ModelParams& params) {
  return ilm_local_log(g, params).array().exp();
}

IlmScore ilm_score(const LabelSeq& labels, const ModelParams& params) {
  const Matrix dec = decode_history(labels, params);
  IlmScore s;
  s.local.resize(labels.size(), params.config.vocab);
  for (std::size_t u = 0; u < labels.size(); ++u) {
    const Vector lp = ilm_local_log(dec.row(u).transpose(), params);
    s.local.row(u) = lp.array().exp().transpose();
    s.sequence_log_prob += lp(Alphabet::index_of(labels[u]));
  }
  return s;
}

double ilm_sequence(const LabelSeq& labels, const ModelParams& params) {
  return ilm_score(labels, params).sequence_log_prob;
}

double prior_cost(std::span<const LabelSeq> transcripts,
                  const ModelParams& params) {
  if (transcripts.empty()) throw ArgumentError("prior cost of an empty dataset");
  double total = 0.0;
  for (const auto& y : transcripts) total -= ilm_sequence(y, params);
  return total / static_cast<double>(transcripts.size());
}

double mtl_prior_loss(const Matrix& dec, const LabelSeq& labels,
                      const ModelParams& params) {
  check_shape(dec.rows() == static_cast<Eigen::Index>(labels.size()) + 1,
              "decoder rows for prior loss");
  double loss = 0.0;
  for (std::size_t u = 0; u < labels.size(); ++u) {
    check_label(labels[u], params.config.vocab);
    loss -= ilm_local_log(dec.row(u).transpose(), params)(
        Alphabet::index_of(labels[u]));
  }
  return loss;
}

// ---------------------------------------------------------------------------

LinearityAccumulator::LinearityAccumulator(int dim)
    : mean_(Vector::Zero(dim)), m2_(Vector::Zero(dim)) {}

void LinearityAccumulator::add(const Vector& x) {
  check_shape(x.size() == mean_.size(), "linearity sample width");
  ++count_;
  const Vector delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += (delta.array() * (x - mean_).array()).matrix();
}

void LinearityAccumulator::merge(const LinearityAccumulator& other) {
  check_shape(other.mean_.size() == mean_.size(), "linearity merge width");
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double n1 = static_cast<double>(count_);
  const double n2 = static_cast<double>(other.count_);
  const double n = n1 + n2;
  const Vector delta = other.mean_ - mean_;
  mean_ += delta * (n2 / n);
  m2_ += other.m2_ + (delta.array().square() * (n1 * n2 / n)).matrix();
  count_ += other.count_;
}

LinearityStats LinearityAccumulator::finish(double threshold) const {
  if (!(threshold > 0)) throw ArgumentError("linear-range threshold must be > 0");
  if (count_ == 0) throw ArgumentError("linearity statistics of no samples");
  LinearityStats s;
  s.threshold = threshold;
  s.count = count_;
  s.mean = mean_;
  // Population variance over all observed cells.
  s.stddev = (m2_ / static_cast<double>(count_)).array().max(0.0).sqrt();
  int inside = 0;
  for (Eigen::Index d = 0; d < s.mean.size(); ++d)
    if (s.mean(d) - s.stddev(d) >= -threshold &&
        s.mean(d) + s.stddev(d) <= threshold)
      ++inside;
  s.linear_range_fraction =
      static_cast<double>(inside) / static_cast<double>(s.mean.size());
  return s;
}

LinearityStats linearity_stats(std::span<const Example> data,
                               const ModelParams& params, double threshold) {
  if (!(threshold > 0)) throw ArgumentError("linear-range threshold must be > 0");
  if (data.empty()) throw ArgumentError("linearity statistics of an empty dataset");
  LinearityAccumulator acc(params.config.joint_dim);
  for (const auto& ex : data) {
    const Activations acts = forward(ex.features, ex.labels, params);
    for (Eigen::Index t = 0; t < acts.enc.rows(); ++t)
      for (Eigen::Index u = 0; u < acts.dec.rows(); ++u)
        acc.add((acts.enc.row(t) + acts.dec.row(u)).transpose());
  }
  return acc.finish(threshold);
}

double factorization_residual(const Activations& acts,
                              const ModelParams& params) {
  const Eigen::Index T = acts.enc.rows(), P = acts.dec.rows();
  const int V = params.config.vocab;
  Matrix ilm(P, V);
  for (Eigen::Index u = 0; u < P; ++u)
    ilm.row(u) = ilm_local_log(acts.dec.row(u).transpose(), params).transpose();
  const auto grid = hat_grid(acts, params);
  double worst = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    // r.row(u) = log P_{t,u}(.) - log ILM_u(.)
    Matrix r(P, V);
    for (Eigen::Index u = 0; u < P; ++u)
      r.row(u) = grid.log_label.row(grid.cell(static_cast<int>(t),
                                              static_cast<int>(u))) -
                 ilm.row(u);
    for (Eigen::Index u = 0; u < P; ++u)
      for (Eigen::Index v = u + 1; v < P; ++v) {
        const Eigen::RowVectorXd q = r.row(u) - r.row(v);
        worst = std::max(worst, q.maxCoeff() - q.minCoeff());
      }
  }
  return worst;
}

void write_linearity(std::ostream& os, const LinearityStats& stats,
                     double max_residual) {
  char buf[128];
  os << "dim\tmean\tstddev\n";
  for (Eigen::Index d = 0; d < stats.mean.size(); ++d) {
    std::snprintf(buf, sizeof buf, "%lld\t%.9g\t%.9g\n",
                  static_cast<long long>(d + 1), stats.mean(d), stats.stddev(d));
    os << buf;
  }
  std::snprintf(buf, sizeof buf,
                "summary\tlinear_range_fraction=%.6f\tthreshold=%.6g\t"
                "max_factorization_residual=%.9g\n",
                stats.linear_range_fraction, stats.threshold, max_residual);
  os << buf;
}

}  // namespace hat
