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

#include "hat/network.hpp"

#include <random>
#include <string>

namespace hat {

ModelConfig ModelConfig::reference() {
  ModelConfig c;
  c.vocab = 42;
  c.joint_dim = 768;
  c.embed_dim = 128;
  c.dec_hidden = 256;
  c.enc_hidden = 2048;
  c.feat_dim = 256;
  return c;
}

int FiniteContextTable::num_entries(int vocab, int context_size) {
  int n = 1;
  for (int i = 0; i < context_size; ++i) n *= vocab + 1;
  return n;
}

int FiniteContextTable::entry_index(const LabelSeq& history,
                                    std::size_t upto) const {
  int index = 0;
  int scale = 1;
  for (int k = 0; k < context_size; ++k) {
    // k-th most recent symbol of the start-padded history y_1..y_upto.
    const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(upto) - 1 - k;
    const int digit = pos >= 0 ? history[pos] : 0;
    index += digit * scale;
    scale *= vocab + 1;
  }
  return index;
}

namespace {

ElmanCell zero_cell(int in, int hidden) {
  return {Matrix::Zero(hidden, in), Matrix::Zero(hidden, hidden),
          Vector::Zero(hidden)};
}

void validate(const ModelConfig& c) {
  if (c.vocab < 1 || c.feat_dim < 1 || c.embed_dim < 1 || c.enc_hidden < 1 ||
      c.dec_hidden < 1 || c.joint_dim < 1)
    throw ArgumentError("model dimensions must be positive");
  if (c.context < kInfiniteContext)
    throw ArgumentError("context size must be >= 0 or infinite");
}

}  // namespace

ModelParams ModelParams::zeros(const ModelConfig& config) {
  validate(config);
  ModelParams p;
  p.config = config;
  const int V = config.vocab, D = config.joint_dim;
  p.label_embedding = Matrix::Zero(V + 1, config.embed_dim);
  p.encoder = zero_cell(config.feat_dim, config.enc_hidden);
  p.decoder = zero_cell(config.embed_dim, config.dec_hidden);
  p.enc_proj = Matrix::Zero(D, config.enc_hidden);
  p.dec_proj = Matrix::Zero(D, config.dec_hidden);
  p.joint_out = Matrix::Zero(V, D);
  p.joint_bias = Vector::Zero(V);
  p.blank_w = Vector::Zero(D);
  p.blank_bias = 0.0;
  if (config.context >= 0) {
    p.context_table.context_size = config.context;
    p.context_table.vocab = V;
    p.context_table.table =
        Matrix::Zero(FiniteContextTable::num_entries(V, config.context), D);
  }
  return p;
}

ModelParams ModelParams::random(const ModelConfig& config) {
  ModelParams p = zeros(config);
  std::mt19937_64 gen(config.seed);
  std::uniform_real_distribution<double> dist(-config.init_scale,
                                              config.init_scale);
  for (auto& t : p.tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = dist(gen);
  return p;
}

std::vector<ModelParams::TensorRef> ModelParams::tensors() {
  std::vector<TensorRef> out;
  auto add = [&](const char* name, auto& m) {
    out.push_back({name, m.data(), m.rows(), m.cols()});
  };
  add("label_embedding", label_embedding);
  add("encoder.w_x", encoder.w_x);
  add("encoder.w_h", encoder.w_h);
  add("encoder.bias", encoder.bias);
  add("decoder.w_x", decoder.w_x);
  add("decoder.w_h", decoder.w_h);
  add("decoder.bias", decoder.bias);
  add("enc_proj", enc_proj);
  add("dec_proj", dec_proj);
  add("joint_out", joint_out);
  add("joint_bias", joint_bias);
  add("blank_w", blank_w);
  out.push_back({"blank_bias", &blank_bias, 1, 1});
  if (finite_context()) add("context_table", context_table.table);
  return out;
}

std::vector<ModelParams::TensorRef> ModelParams::tensors() const {
  return const_cast<ModelParams*>(this)->tensors();
}

void ModelParams::set_zero() {
  for (auto& t : tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = 0.0;
}

ModelParams& ModelParams::operator+=(const ModelParams& other) {
  auto mine = tensors();
  auto theirs = other.tensors();
  check_shape(mine.size() == theirs.size(), "parameter sets differ");
  for (std::size_t k = 0; k < mine.size(); ++k) {
    check_shape(mine[k].size() == theirs[k].size(), mine[k].name);
    for (Eigen::Index i = 0; i < mine[k].size(); ++i)
      mine[k].data[i] += theirs[k].data[i];
  }
  return *this;
}

ModelParams& ModelParams::operator*=(double s) {
  for (auto& t : tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] *= s;
  return *this;
}

double ModelParams::squared_norm() const {
  double s = 0.0;
  for (const auto& t : tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i) s += t.data[i] * t.data[i];
  return s;
}

bool ModelParams::finite() const {
  for (const auto& t : tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i)
      if (!std::isfinite(t.data[i])) return false;
  return true;
}

void check_label(Symbol label, int vocab) {
  if (label < 1 || label > vocab)
    throw VocabularyError("label id " + std::to_string(label) +
                          " outside vocabulary of size " +
                          std::to_string(vocab));
}

// ---------------------------------------------------------------------------

namespace {

// Hidden states of the encoder recurrence, one row per frame.
Matrix encoder_states(const Matrix& features, const ModelParams& params) {
  const auto& cell = params.encoder;
  check_shape(features.rows() >= 1, "encoder needs at least one frame");
  check_shape(features.cols() == cell.w_x.cols(),
              "feature width " + std::to_string(features.cols()) +
                  " != encoder input " + std::to_string(cell.w_x.cols()));
  const Eigen::Index T = features.rows(), H = cell.w_h.rows();
  Matrix states(T, H);
  Vector h = Vector::Zero(H);
  for (Eigen::Index t = 0; t < T; ++t) {
    h = (cell.w_x * features.row(t).transpose() + cell.w_h * h + cell.bias)
            .array()
            .tanh();
    states.row(t) = h.transpose();
  }
  return states;
}

Matrix decoder_states(const LabelSeq& history, const ModelParams& params) {
  const auto& cell = params.decoder;
  const Eigen::Index H = cell.w_h.rows();
  Matrix states(history.size() + 1, H);
  Vector h = Vector::Zero(H);
  for (std::size_t u = 0; u <= history.size(); ++u) {
    const int row = u == 0 ? params.start_row() : Alphabet::index_of(history[u - 1]);
    h = (cell.w_x * params.label_embedding.row(row).transpose() +
         cell.w_h * h + cell.bias)
            .array()
            .tanh();
    states.row(u) = h.transpose();
  }
  return states;
}

void require_finite(const Matrix& m, const char* what) {
  if (!all_finite(m)) throw NumericError(std::string("non-finite ") + what);
}

}  // namespace

Matrix encode(const Matrix& features, const ModelParams& params) {
  Matrix enc = encoder_states(features, params) * params.enc_proj.transpose();
  require_finite(enc, "encoder activations");
  return enc;
}

Matrix decode_labels(const LabelSeq& history, const ModelParams& params) {
  for (Symbol y : history) check_label(y, params.config.vocab);
  Matrix dec = decoder_states(history, params) * params.dec_proj.transpose();
  require_finite(dec, "decoder activations");
  return dec;
}

Matrix decode_labels_finite(const LabelSeq& history,
                            const FiniteContextTable& table) {
  for (Symbol y : history) check_label(y, table.vocab);
  Matrix dec(history.size() + 1, table.table.cols());
  for (std::size_t u = 0; u <= history.size(); ++u)
    dec.row(u) = table.table.row(table.entry_index(history, u));
  return dec;
}

Matrix decode_history(const LabelSeq& history, const ModelParams& params) {
  if (params.finite_context())
    return decode_labels_finite(history, params.context_table);
  return decode_labels(history, params);
}

Activations forward(const Matrix& features, const LabelSeq& labels,
                    const ModelParams& params) {
  return {encode(features, params), decode_history(labels, params)};
}

Vector joint_activation(const Vector& z, JointActivation act) {
  if (act == JointActivation::kIdentity) return z;
  return z.array().tanh();
}

Vector joint(const Vector& f, const Vector& g, const ModelParams& params) {
  check_shape(f.size() == params.config.joint_dim &&
                  g.size() == params.config.joint_dim,
              "joint input width");
  return params.joint_out * joint_activation(f + g, params.config.activation) +
         params.joint_bias;
}

double blank_logit(const Vector& f, const Vector& g, const ModelParams& params) {
  check_shape(f.size() == params.blank_w.size() &&
                  g.size() == params.blank_w.size(),
              "blank head input width");
  return params.blank_w.dot(f + g) + params.blank_bias;
}

DecoderState initial_decoder_state(const ModelParams& params) {
  DecoderState s;
  if (params.finite_context()) {
    s.output = params.context_table.table.row(
        params.context_table.entry_index(s.recent, 0)).transpose();
    return s;
  }
  const auto& cell = params.decoder;
  s.hidden = (cell.w_x * params.label_embedding.row(params.start_row()).transpose() +
              cell.bias)
                 .array()
                 .tanh();
  s.output = params.dec_proj * s.hidden;
  return s;
}

DecoderState advance_decoder(const DecoderState& state, Symbol label,
                             const ModelParams& params) {
  check_label(label, params.config.vocab);
  DecoderState s;
  if (params.finite_context()) {
    const int c = params.context_table.context_size;
    s.recent = state.recent;
    s.recent.push_back(label);
    if (static_cast<int>(s.recent.size()) > c)
      s.recent.erase(s.recent.begin(), s.recent.end() - c);
    s.output = params.context_table.table.row(
        params.context_table.entry_index(s.recent, s.recent.size())).transpose();
    return s;
  }
  const auto& cell = params.decoder;
  s.hidden = (cell.w_x * params.label_embedding.row(Alphabet::index_of(label)).transpose() +
              cell.w_h * state.hidden + cell.bias)
                 .array()
                 .tanh();
  s.output = params.dec_proj * s.hidden;
  return s;
}

// ---------------------------------------------------------------------------

void backprop_encoder(const Matrix& features, const ModelParams& params,
                      const Matrix& d_enc, GradientSet& grads) {
  const Matrix states = encoder_states(features, params);
  check_shape(d_enc.rows() == states.rows() &&
                  d_enc.cols() == params.enc_proj.rows(),
              "encoder gradient");
  grads.enc_proj += d_enc.transpose() * states;
  // d loss / d hidden state, then through tanh and back in time.
  Matrix d_states = d_enc * params.enc_proj;
  const auto& cell = params.encoder;
  Vector carry = Vector::Zero(cell.w_h.rows());
  for (Eigen::Index t = states.rows() - 1; t >= 0; --t) {
    const Vector dh = d_states.row(t).transpose() + carry;
    const Vector dz =
        dh.array() * (1.0 - states.row(t).transpose().array().square());
    grads.encoder.w_x += dz * features.row(t);
    if (t > 0) grads.encoder.w_h += dz * states.row(t - 1);
    grads.encoder.bias += dz;
    carry = cell.w_h.transpose() * dz;
  }
}

void backprop_decoder(const LabelSeq& history, const ModelParams& params,
                      const Matrix& d_dec, GradientSet& grads) {
  check_shape(d_dec.rows() == static_cast<Eigen::Index>(history.size()) + 1,
              "decoder gradient rows");
  if (params.finite_context()) {
    const auto& table = params.context_table;
    for (std::size_t u = 0; u <= history.size(); ++u)
      grads.context_table.table.row(table.entry_index(history, u)) +=
          d_dec.row(u);
    return;
  }
  const Matrix states = decoder_states(history, params);
  grads.dec_proj += d_dec.transpose() * states;
  Matrix d_states = d_dec * params.dec_proj;
  const auto& cell = params.decoder;
  Vector carry = Vector::Zero(cell.w_h.rows());
  for (Eigen::Index u = states.rows() - 1; u >= 0; --u) {
    const Vector dh = d_states.row(u).transpose() + carry;
    const Vector dz =
        dh.array() * (1.0 - states.row(u).transpose().array().square());
    const int row = u == 0 ? params.start_row() : Alphabet::index_of(history[u - 1]);
    grads.decoder.w_x += dz * params.label_embedding.row(row);
    grads.label_embedding.row(row) += (cell.w_x.transpose() * dz).transpose();
    if (u > 0) grads.decoder.w_h += dz * states.row(u - 1);
    grads.decoder.bias += dz;
    carry = cell.w_h.transpose() * dz;
  }
}

}  // namespace hat
