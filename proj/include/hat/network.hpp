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

// Encoder/decoder trunks, the joint network and the blank head.
//
// One encoder and one decoder feed both the blank head and the label head.
// The decoder is either an Elman recurrence over label embeddings or a
// finite-context lookup table indexed by the last c labels.

#pragma once

#include "hat/core.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hat {

inline constexpr int kInfiniteContext = -1;

enum class JointActivation { kTanh, kIdentity };

struct ModelConfig {
  int vocab = 6;  // |V|
  int feat_dim = 16;
  int embed_dim = 8;
  int enc_hidden = 32;
  int dec_hidden = 32;
  int joint_dim = 32;  // D
  int context = kInfiniteContext;
  JointActivation activation = JointActivation::kTanh;
  std::uint64_t seed = 47;
  double init_scale = 0.1;

  /// Dimensions of the reference system (|V| = 42 phonemes, D = 768).
  static ModelConfig reference();
};

/// state' = tanh(w_x x + w_h state + bias)
struct ElmanCell {
  Matrix w_x;
  Matrix w_h;
  Vector bias;
};

/// Decoder for a bounded label history. Entry index is the base-(|V|+1)
/// number formed by the last c symbols, each mapped to a digit with the
/// sentence start as digit 0 and label y as digit y.
struct FiniteContextTable {
  int context_size = 0;
  int vocab = 0;
  Matrix table;  // (|V|+1)^c x D

  static int num_entries(int vocab, int context_size);
  int entry_index(const LabelSeq& history, std::size_t upto) const;
};

struct ModelParams {
  ModelConfig config;
  Matrix label_embedding;  // (|V|+1) x E, last row is the sentence start
  ElmanCell encoder;
  ElmanCell decoder;
  Matrix enc_proj;  // D x H_e
  Matrix dec_proj;  // D x H_d
  Matrix joint_out;  // |V| x D
  Vector joint_bias;
  Vector blank_w;
  double blank_bias = 0.0;
  FiniteContextTable context_table;  // used when config.context >= 0

  bool finite_context() const { return config.context >= 0; }
  int start_row() const { return config.vocab; }

  /// All tensors shaped from `config` and filled with zeros.
  static ModelParams zeros(const ModelConfig& config);
  /// Uniform on [-init_scale, init_scale] from a generator seeded with
  /// config.seed.
  static ModelParams random(const ModelConfig& config);

  struct TensorRef {
    std::string name;
    double* data;
    Eigen::Index rows;
    Eigen::Index cols;
    Eigen::Index size() const { return rows * cols; }
  };
  /// Named views over every trainable tensor, in checkpoint order.
  std::vector<TensorRef> tensors();
  std::vector<TensorRef> tensors() const;

  void set_zero();
  ModelParams& operator+=(const ModelParams& other);
  ModelParams& operator*=(double s);
  double squared_norm() const;
  bool finite() const;
};

/// Gradient buffers share the parameter layout.
using GradientSet = ModelParams;

struct Activations {
  Matrix enc;  // T x D, rows f_1..f_T
  Matrix dec;  // (U+1) x D, row 0 is the sentence start
};

// Forward passes -------------------------------------------------------------

Matrix encode(const Matrix& features, const ModelParams& params);
Matrix decode_labels(const LabelSeq& history, const ModelParams& params);
Matrix decode_labels_finite(const LabelSeq& history,
                            const FiniteContextTable& table);
/// Dispatches on params.config.context.
Matrix decode_history(const LabelSeq& history, const ModelParams& params);
Activations forward(const Matrix& features, const LabelSeq& labels,
                    const ModelParams& params);

Vector joint_activation(const Vector& z, JointActivation act);

/// J(f + g) = joint_out * act(f + g) + joint_bias.
Vector joint(const Vector& f, const Vector& g, const ModelParams& params);
/// w . (f + g) + bias, before the sigmoid.
double blank_logit(const Vector& f, const Vector& g, const ModelParams& params);

/// Incremental decoder state for search.
struct DecoderState {
  Vector hidden;   // recurrent state (infinite context)
  LabelSeq recent;  // last c labels (finite context)
  Vector output;   // g_u
};

DecoderState initial_decoder_state(const ModelParams& params);
DecoderState advance_decoder(const DecoderState& state, Symbol label,
                             const ModelParams& params);

void check_label(Symbol label, int vocab);

// Reverse mode ---------------------------------------------------------------

/// Accumulates into `grads` the gradient flowing from d(loss)/d(enc).
void backprop_encoder(const Matrix& features, const ModelParams& params,
                      const Matrix& d_enc, GradientSet& grads);
/// Same for d(loss)/d(dec) with dec rows g_0..g_U.
void backprop_decoder(const LabelSeq& history, const ModelParams& params,
                      const Matrix& d_dec, GradientSet& grads);

}  // namespace hat
