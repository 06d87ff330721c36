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

#include "hat/gradients.hpp"

#include <cmath>
#include <string>

namespace hat {
namespace {

void require_finite_loss(double loss) {
  if (!std::isfinite(loss))
    throw NumericError("sequence loss is not finite (" + std::to_string(loss) +
                       "); the reference has no probability mass");
}

ScoreGradients transducer_score_gradients(GridKind kind,
                                          const JointScores<double>& scores,
                                          const LabelSeq& labels,
                                          LossResult<double>& fwd) {
  const auto grid = kind == GridKind::kHat ? hat_grid(scores) : rnnt_grid(scores);
  fwd = transducer_loss(grid, labels, /*with_beta=*/true);
  require_finite_loss(fwd.neg_log_posterior);
  const double log_z = -fwd.neg_log_posterior;
  const int T = grid.frames(), P = grid.positions(), V = grid.vocab();

  ScoreGradients d{Matrix::Zero(T, P), Matrix::Zero(scores.labels.rows(), V)};
  for (int t = 0; t < T; ++t)
    for (int u = 0; u < P; ++u) {
      // Posterior occupancy of the outgoing blank and label edges.
      double occ_blank = 0.0, occ_label = 0.0;
      if (t < T - 1)
        occ_blank = std::exp(fwd.alpha(t, u) + grid.blank_edge(t, u) +
                             fwd.beta(t + 1, u) - log_z);
      int y = -1;
      if (u < P - 1) {
        y = Alphabet::index_of(labels[u]);
        occ_label = std::exp(fwd.alpha(t, u) + grid.label_edge(t, u, labels[u]) +
                             fwd.beta(t, u + 1) - log_z);
      }
      const Eigen::Index r = grid.cell(t, u);
      if (kind == GridKind::kHat) {
        const double b = std::exp(grid.log_blank(t, u));
        d.blank(t, u) = -occ_blank * (1.0 - b) + occ_label * b;
        if (y >= 0) {
          d.labels.row(r) = occ_label * grid.log_label.row(r).array().exp();
          d.labels(r, y) -= occ_label;
        }
      } else {
        const double occ = occ_blank + occ_label;
        d.blank(t, u) = occ * std::exp(grid.log_blank(t, u)) - occ_blank;
        d.labels.row(r) = occ * grid.log_label.row(r).array().exp();
        if (y >= 0) d.labels(r, y) -= occ_label;
      }
    }
  return d;
}

ScoreGradients ctc_score_gradients(const JointScores<double>& scores,
                                   const LabelSeq& labels,
                                   LossResult<double>& fwd) {
  const auto grid = ctc_grid(scores);
  fwd = ctc_loss(grid, labels, /*with_beta=*/true);
  require_finite_loss(fwd.neg_log_posterior);
  const double log_z = -fwd.neg_log_posterior;
  const int T = grid.frames(), V = grid.vocab();
  const int S = static_cast<int>(fwd.alpha.cols());

  ScoreGradients d{Matrix::Zero(T, 1), Matrix::Zero(T, V)};
  for (int t = 0; t < T; ++t) {
    Vector occ = Vector::Zero(V + 1);  // index 0 is blank
    for (int s = 0; s < S; ++s) {
      const double g = std::exp(fwd.alpha(t, s) + fwd.beta(t, s) - log_z);
      const Symbol sym = detail::ctc_state_symbol(labels, s);
      occ(sym == kBlank ? 0 : sym) += g;
    }
    const double total = occ.sum();
    d.blank(t, 0) = total * std::exp(grid.log_blank(t, 0)) - occ(0);
    d.labels.row(t) =
        (total * grid.log_label.row(t).array().exp()).matrix() -
        occ.tail(V).transpose();
  }
  return d;
}

Vector activation_derivative(const Vector& z, JointActivation act) {
  if (act == JointActivation::kIdentity) return Vector::Ones(z.size());
  return 1.0 - z.array().tanh().square();
}

void check_gradients(const GradientSet& grads) {
  for (const auto& t : grads.tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i)
      if (!std::isfinite(t.data[i]))
        throw NumericError("non-finite gradient in tensor " + t.name);
}

}  // namespace

ScoreGradients score_gradients(GridKind kind, const JointScores<double>& scores,
                               const LabelSeq& labels,
                               LossResult<double>* forward) {
  LossResult<double> local;
  LossResult<double>& fwd = forward ? *forward : local;
  if (kind == GridKind::kCtc) return ctc_score_gradients(scores, labels, fwd);
  return transducer_score_gradients(kind, scores, labels, fwd);
}

ObjectiveResult objective_gradients(GridKind kind, const Matrix& features,
                                    const LabelSeq& labels,
                                    const ModelParams& params,
                                    double mtl_weight) {
  const Matrix enc = encode(features, params);
  const Matrix dec = decode_history(labels, params);
  const int D = params.config.joint_dim;
  // CTC sees only the encoder: a single zero decoder row.
  const Activations acts{
      enc, kind == GridKind::kCtc ? Matrix(Matrix::Zero(1, D)) : dec};

  ObjectiveResult out;
  out.grads = ModelParams::zeros(params.config);
  GradientSet& grads = out.grads;

  const JointScores<double> scores = joint_scores(acts, params);
  const ScoreGradients ds = score_gradients(kind, scores, labels, &out.forward);
  out.sequence_loss = out.forward.neg_log_posterior;

  Matrix d_enc = Matrix::Zero(enc.rows(), D);
  Matrix d_dec = Matrix::Zero(dec.rows(), D);
  const Eigen::Index T = acts.enc.rows(), P = acts.dec.rows();
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index u = 0; u < P; ++u) {
      const Eigen::Index r = t * P + u;
      const Vector z = (acts.enc.row(t) + acts.dec.row(u)).transpose();
      const Vector h = joint_activation(z, params.config.activation);
      const Vector d_score = ds.labels.row(r).transpose();
      const double d_blank = ds.blank(t, u);
      grads.joint_out += d_score * h.transpose();
      grads.joint_bias += d_score;
      grads.blank_w += d_blank * z;
      grads.blank_bias += d_blank;
      const Vector dz =
          (params.joint_out.transpose() * d_score).cwiseProduct(
              activation_derivative(z, params.config.activation)) +
          d_blank * params.blank_w;
      d_enc.row(t) += dz.transpose();
      if (kind != GridKind::kCtc) d_dec.row(u) += dz.transpose();
    }

  out.prior_loss = mtl_prior_loss(dec, labels, params);
  if (mtl_weight != 0.0) {
    for (std::size_t u = 0; u < labels.size(); ++u) {
      const Vector g = dec.row(u).transpose();
      Vector d_score = ilm_local(g, params);
      d_score(Alphabet::index_of(labels[u])) -= 1.0;
      d_score *= mtl_weight;
      const Vector h = joint_activation(g, params.config.activation);
      grads.joint_out += d_score * h.transpose();
      grads.joint_bias += d_score;
      d_dec.row(u) += (params.joint_out.transpose() * d_score)
                          .cwiseProduct(activation_derivative(
                              g, params.config.activation))
                          .transpose();
    }
  }
  out.objective = out.sequence_loss + mtl_weight * out.prior_loss;

  backprop_encoder(features, params, d_enc, grads);
  backprop_decoder(labels, params, d_dec, grads);
  check_gradients(grads);
  return out;
}

double objective_value(GridKind kind, const Matrix& features,
                       const LabelSeq& labels, const ModelParams& params,
                       double mtl_weight) {
  const Matrix enc = encode(features, params);
  const Matrix dec = decode_history(labels, params);
  double loss = 0.0;
  if (kind == GridKind::kCtc)
    loss = ctc_loss(ctc_grid(enc, params), labels).neg_log_posterior;
  else
    loss = transducer_loss(make_grid(kind, {enc, dec}, params), labels)
               .neg_log_posterior;
  if (mtl_weight != 0.0) loss += mtl_weight * mtl_prior_loss(dec, labels, params);
  return loss;
}

}  // namespace hat
