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

#include <cstdio>

namespace hat {

const char* to_string(GridKind kind) {
  switch (kind) {
    case GridKind::kHat: return "hat";
    case GridKind::kRnnt: return "rnnt";
    case GridKind::kCtc: return "ctc";
  }
  return "?";
}

CellPosterior hat_cell(const Vector& f, const Vector& g,
                       const ModelParams& params) {
  const double l = blank_logit(f, g, params);
  CellPosterior c;
  c.log_blank = log_sigmoid(l);
  c.log_label_edges = log_softmax(joint(f, g, params)).array() + log_sigmoid(-l);
  return c;
}

CellPosterior rnnt_cell(const Vector& f, const Vector& g,
                        const ModelParams& params) {
  const int V = params.config.vocab;
  Vector logits(V + 1);
  logits(0) = blank_logit(f, g, params);
  logits.tail(V) = joint(f, g, params);
  const Vector lp = log_softmax(logits);
  return {lp(0), lp.tail(V)};
}

JointScores<double> joint_scores(const Activations& acts,
                                 const ModelParams& params) {
  const int T = static_cast<int>(acts.enc.rows());
  const int P = static_cast<int>(acts.dec.rows());
  check_shape(acts.enc.cols() == params.config.joint_dim &&
                  acts.dec.cols() == params.config.joint_dim,
              "activation width");
  JointScores<double> s;
  s.blank.resize(T, P);
  s.labels.resize(static_cast<Eigen::Index>(T) * P, params.config.vocab);
  for (int t = 0; t < T; ++t) {
    const Vector f = acts.enc.row(t).transpose();
    for (int u = 0; u < P; ++u) {
      const Vector g = acts.dec.row(u).transpose();
      s.blank(t, u) = blank_logit(f, g, params);
      s.labels.row(static_cast<Eigen::Index>(t) * P + u) =
          joint(f, g, params).transpose();
    }
  }
  return s;
}

LocalPosteriorGrid<double> hat_grid(const Activations& acts,
                                    const ModelParams& params) {
  return hat_grid(joint_scores(acts, params));
}

LocalPosteriorGrid<double> rnnt_grid(const Activations& acts,
                                     const ModelParams& params) {
  return rnnt_grid(joint_scores(acts, params));
}

LocalPosteriorGrid<double> ctc_grid(const Matrix& enc, const ModelParams& params,
                                    int positions) {
  Activations frame_only{enc, Matrix::Zero(1, enc.cols())};
  return ctc_grid(joint_scores(frame_only, params), positions);
}

LocalPosteriorGrid<double> make_grid(GridKind kind, const Activations& acts,
                                     const ModelParams& params) {
  switch (kind) {
    case GridKind::kHat: return hat_grid(acts, params);
    case GridKind::kRnnt: return rnnt_grid(acts, params);
    case GridKind::kCtc:
      return ctc_grid(acts.enc, params, static_cast<int>(acts.dec.rows()));
  }
  throw ArgumentError("unknown grid kind");
}

void write_grid(std::ostream& os, const LocalPosteriorGrid<double>& grid,
                const std::vector<std::string>& label_names) {
  os << "t\tu\t<b>";
  for (int k = 0; k < grid.vocab(); ++k) {
    if (static_cast<std::size_t>(k) < label_names.size())
      os << '\t' << label_names[k];
    else
      os << "\tL" << Alphabet::label_at(k);
  }
  os << '\n';
  char buf[32];
  for (int t = 0; t < grid.frames(); ++t)
    for (int u = 0; u < grid.positions(); ++u) {
      os << t + 1 << '\t' << u;
      const Vector e = grid.edges(t, u);
      for (Eigen::Index k = 0; k < e.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", e(k));
        os << '\t' << buf;
      }
      os << '\n';
    }
}

}  // namespace hat
