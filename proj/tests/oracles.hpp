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

// Reference implementations used by the tests. Everything here is written
// with plain loops in the probability domain and shares no code with the
// library beyond the parameter containers.

#pragma once

#include "hat/network.hpp"
#include "hat/ngram.hpp"
#include "hat/posterior.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

using hat::Matrix;
using hat::ModelParams;
using hat::Vector;

inline std::vector<double> cell_step(const Matrix& w_x, const Matrix& w_h, const Vector& bias,
                                     const std::vector<double>& input,
                                     const std::vector<double>& state) {
  std::vector<double> next(w_h.rows());
  for (Eigen::Index i = 0; i < w_h.rows(); ++i) {
    double z = bias(i);
    for (Eigen::Index j = 0; j < w_x.cols(); ++j) z += w_x(i, j) * input[j];
    for (Eigen::Index j = 0; j < w_h.cols(); ++j) z += w_h(i, j) * state[j];
    next[i] = std::tanh(z);
  }
  return next;
}

inline std::vector<double> project(const Matrix& w, const std::vector<double>& h) {
  std::vector<double> out(w.rows(), 0.0);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) out[i] += w(i, j) * h[j];
  return out;
}

/// Encoder outputs f_1..f_T.
inline std::vector<std::vector<double>> encoder(const Matrix& x, const ModelParams& p) {
  std::vector<double> h(p.encoder.w_h.rows(), 0.0);
  std::vector<std::vector<double>> out;
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    std::vector<double> in(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) in[j] = x(t, j);
    h = cell_step(p.encoder.w_x, p.encoder.w_h, p.encoder.bias, in, h);
    out.push_back(project(p.enc_proj, h));
  }
  return out;
}

/// Decoder outputs g_0..g_U. Finite context reads the table with a
/// base-(|V|+1) index of the last c labels, most recent first, padded with 0.
inline std::vector<std::vector<double>> decoder(const hat::LabelSeq& y, const ModelParams& p) {
  std::vector<std::vector<double>> out;
  if (p.config.context >= 0) {
    const int c = p.config.context, base = p.config.vocab + 1;
    for (std::size_t u = 0; u <= y.size(); ++u) {
      int index = 0, scale = 1;
      for (int k = 0; k < c; ++k) {
        const long pos = static_cast<long>(u) - 1 - k;
        index += (pos >= 0 ? y[pos] : 0) * scale;
        scale *= base;
      }
      std::vector<double> row(p.context_table.table.cols());
      for (std::size_t d = 0; d < row.size(); ++d) row[d] = p.context_table.table(index, d);
      out.push_back(row);
    }
    return out;
  }
  std::vector<double> h(p.decoder.w_h.rows(), 0.0);
  for (std::size_t u = 0; u <= y.size(); ++u) {
    const int row = u == 0 ? p.config.vocab : y[u - 1] - 1;
    std::vector<double> emb(p.label_embedding.cols());
    for (std::size_t j = 0; j < emb.size(); ++j) emb[j] = p.label_embedding(row, j);
    h = cell_step(p.decoder.w_x, p.decoder.w_h, p.decoder.bias, emb, h);
    out.push_back(project(p.dec_proj, h));
  }
  return out;
}

/// Label scores W act(z) + bias.
inline std::vector<double> joint(const std::vector<double>& z, const ModelParams& p) {
  std::vector<double> out(p.joint_out.rows());
  for (Eigen::Index k = 0; k < p.joint_out.rows(); ++k) {
    double s = p.joint_bias(k);
    for (Eigen::Index d = 0; d < p.joint_out.cols(); ++d) {
      const double a = p.config.activation == hat::JointActivation::kTanh ? std::tanh(z[d]) : z[d];
      s += p.joint_out(k, d) * a;
    }
    out[k] = s;
  }
  return out;
}

inline std::vector<double> add(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> s(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) s[i] = a[i] + b[i];
  return s;
}

inline std::vector<double> softmax(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  std::vector<double> e(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) total += e[i] = std::exp(v[i] - m);
  for (double& x : e) x /= total;
  return e;
}

/// Probabilities of {blank, label 1..|V|} at one cell.
inline std::vector<double> cell(hat::GridKind kind, const std::vector<double>& f,
                                const std::vector<double>& g, const ModelParams& p) {
  const std::vector<double> z = add(f, g);
  const std::vector<double> scores = joint(z, p);
  double blank_logit = p.blank_bias;
  for (std::size_t d = 0; d < z.size(); ++d) blank_logit += p.blank_w(d) * z[d];
  std::vector<double> out(scores.size() + 1);
  if (kind == hat::GridKind::kHat) {
    const double b = 1.0 / (1.0 + std::exp(-blank_logit));
    const std::vector<double> labels = softmax(scores);
    out[0] = b;
    for (std::size_t k = 0; k < labels.size(); ++k) out[k + 1] = (1.0 - b) * labels[k];
    return out;
  }
  std::vector<double> logits(scores.size() + 1);
  logits[0] = blank_logit;
  std::copy(scores.begin(), scores.end(), logits.begin() + 1);
  return softmax(logits);
}

/// P(y|x) for HAT or RNNT by summing every lattice path recursively.
inline double transducer_prob(hat::GridKind kind, const Matrix& x, const hat::LabelSeq& y,
                              const ModelParams& p) {
  const auto f = encoder(x, p);
  const auto g = decoder(y, p);
  const int T = static_cast<int>(f.size()), U = static_cast<int>(y.size());
  auto walk = [&](auto&& self, int t, int u) -> double {
    if (t == T - 1 && u == U) return 1.0;
    const std::vector<double> c = cell(kind, f[t], g[u], p);
    double total = 0.0;
    if (t < T - 1) total += c[0] * self(self, t + 1, u);
    if (u < U) total += c[y[u]] * self(self, t, u + 1);
    return total;
  };
  return walk(walk, 0, 0);
}

inline hat::LabelSeq ctc_collapse(const std::vector<int>& frames) {
  hat::LabelSeq out;
  int prev = -1;
  for (int s : frames) {
    if (s != 0 && s != prev) out.push_back(s);
    prev = s;
  }
  return out;
}

/// P(y|x) for CTC by summing every frame sequence in (|V|+1)^T.
inline double ctc_prob(const Matrix& x, const hat::LabelSeq& y, const ModelParams& p) {
  const auto f = encoder(x, p);
  std::vector<std::vector<double>> frame;
  for (const auto& ft : f) {
    std::vector<double> logits(p.config.vocab + 1);
    const std::vector<double> scores = joint(ft, p);
    double b = p.blank_bias;
    for (std::size_t d = 0; d < ft.size(); ++d) b += p.blank_w(d) * ft[d];
    logits[0] = b;
    std::copy(scores.begin(), scores.end(), logits.begin() + 1);
    frame.push_back(softmax(logits));
  }
  const int T = static_cast<int>(f.size()), S = p.config.vocab + 1;
  double total = 0.0;
  std::vector<int> seq(T, 0);
  for (;;) {
    if (ctc_collapse(seq) == y) {
      double prob = 1.0;
      for (int t = 0; t < T; ++t) prob *= frame[t][seq[t]];
      total += prob;
    }
    int t = 0;
    while (t < T && ++seq[t] == S) seq[t++] = 0;
    if (t == T) break;
  }
  return total;
}

/// log P_ILM(y) from softmax(J(g_u)) with the encoder removed.
inline double ilm_log_prob(const hat::LabelSeq& y, const ModelParams& p) {
  const auto g = decoder(y, p);
  double total = 0.0;
  for (std::size_t u = 0; u < y.size(); ++u) total += std::log(softmax(joint(g[u], p))[y[u] - 1]);
  return total;
}

/// Minimal edit distance by exploring every alignment without memoization.
inline int edit_distance(const std::vector<std::string>& r, const std::vector<std::string>& h,
                         std::size_t i = 0, std::size_t j = 0) {
  if (i == r.size()) return static_cast<int>(h.size() - j);
  if (j == h.size()) return static_cast<int>(r.size() - i);
  const int sub = edit_distance(r, h, i + 1, j + 1) + (r[i] == h[j] ? 0 : 1);
  const int del = edit_distance(r, h, i + 1, j) + 1;
  const int ins = edit_distance(r, h, i, j + 1) + 1;
  return std::min({sub, del, ins});
}

/// Backoff scoring straight from ARPA text.
class ArpaReader {
 public:
  explicit ArpaReader(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int order = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (line.size() > 2 && line[0] == '\\' && std::isdigit(static_cast<unsigned char>(line[1]))) {
        order = line[1] - '0';
        max_order_ = std::max(max_order_, order);
        continue;
      }
      if (order == 0 || line[0] == '\\') continue;
      std::istringstream fields(line);
      double lp = 0.0;
      fields >> lp;
      std::vector<std::string> gram(order);
      for (auto& w : gram) fields >> w;
      double bo = 0.0;
      fields >> bo;
      prob_[gram] = lp;
      backoff_[gram] = bo;
    }
  }

  int order() const { return max_order_; }

  /// log10 P(word | history) with standard backoff.
  double log10_prob(std::vector<std::string> history, const std::string& word) const {
    if (static_cast<int>(history.size()) > max_order_ - 1)
      history.erase(history.begin(), history.end() - (max_order_ - 1));
    std::vector<std::string> gram = history;
    gram.push_back(word);
    if (auto it = prob_.find(gram); it != prob_.end()) return it->second;
    if (history.empty()) return -99.0;
    double bo = 0.0;
    if (auto it = backoff_.find(history); it != backoff_.end()) bo = it->second;
    history.erase(history.begin());
    return bo + log10_prob(history, word);
  }

 private:
  int max_order_ = 0;
  std::map<std::vector<std::string>, double> prob_;
  std::map<std::vector<std::string>, double> backoff_;
};

/// Natural-log P(token | history) by walking the model's tables directly.
inline double table_log_prob(const hat::NGramModel& m, std::vector<hat::TokenId> history, hat::TokenId token) {
  if (static_cast<int>(history.size()) > m.order() - 1)
    history.erase(history.begin(), history.end() - (m.order() - 1));
  std::vector<hat::TokenId> gram = history;
  gram.push_back(token);
  const auto& table = m.table(static_cast<int>(gram.size()));
  if (auto it = table.find(gram); it != table.end()) return it->second.log10_prob * hat::kLn10;
  if (history.empty()) return hat::log_zero<double>();
  const auto& ctx = m.table(static_cast<int>(history.size()));
  double backoff = 0.0;
  if (auto it = ctx.find(history); it != ctx.end()) backoff = it->second.log10_backoff * hat::kLn10;
  history.erase(history.begin());
  return backoff + table_log_prob(m, history, token);
}

inline double direct_perplexity(const hat::NGramModel& m, const std::vector<hat::Sentence>& corpus) {
  long double total = 0.0L;
  long long count = 0;
  for (const auto& s : corpus) {
    std::vector<hat::TokenId> history = {m.start_id()};
    std::vector<hat::TokenId> targets;
    for (const auto& w : s) targets.push_back(m.id(w));
    if (m.end_id() >= 0) targets.push_back(m.end_id());
    for (hat::TokenId w : targets) {
      total += table_log_prob(m, history, w);
      history.push_back(w);
      ++count;
    }
  }
  return std::exp(-static_cast<double>(total / count));
}

}  // namespace oracle
