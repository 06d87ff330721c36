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

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hat {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

// Symbol ids: 0 is blank, 1..|V| are labels, |V|+1 is the sentence start.
using Symbol = int;
using LabelSeq = std::vector<Symbol>;

inline constexpr Symbol kBlank = 0;

/// The label inventory V plus the two reserved symbols.
class Alphabet {
 public:
  explicit Alphabet(int num_labels);

  int size() const { return num_labels_; }
  Symbol blank() const { return kBlank; }
  Symbol start() const { return num_labels_ + 1; }
  bool is_label(Symbol s) const { return s >= 1 && s <= num_labels_; }

  // Row of a label in score vectors over V.
  static int index_of(Symbol label) { return label - 1; }
  static Symbol label_at(int index) { return index + 1; }

 private:
  int num_labels_;
};

// ---------------------------------------------------------------------------
// Errors. The CLI maps each family to its own exit code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ShapeError : public Error {
 public:
  using Error::Error;
};
class VocabularyError : public Error {
 public:
  using Error::Error;
};
class ArgumentError : public Error {
 public:
  using Error::Error;
};
class EnumerationTooLarge : public Error {
 public:
  using Error::Error;
};
class InfeasibleError : public Error {
 public:
  using Error::Error;
};
class NumericError : public Error {
 public:
  using Error::Error;
};
class ParseError : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};
class DecodeFailure : public Error {
 public:
  using Error::Error;
};

void check_shape(bool ok, const std::string& what);

// ---------------------------------------------------------------------------
// Log-domain arithmetic.

template <typename Scalar>
constexpr Scalar log_zero() {
  return -std::numeric_limits<Scalar>::infinity();
}

template <typename Scalar>
Scalar log_add(Scalar a, Scalar b) {
  if (a < b) std::swap(a, b);
  if (b == log_zero<Scalar>()) return a;
  return a + std::log1p(std::exp(b - a));
}

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return log_zero<Scalar>();
  const Scalar m = x.maxCoeff();
  if (m == log_zero<Scalar>()) return m;
  return m + std::log((x.derived().array() - m).exp().sum());
}

template <typename Derived>
VectorX<typename Derived::Scalar> log_softmax(
    const Eigen::MatrixBase<Derived>& x) {
  return x.array() - log_sum_exp(x);
}

template <typename Derived>
VectorX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  VectorX<Scalar> e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

// log(sigmoid(x)) without cancellation for large |x|.
template <typename Scalar>
Scalar log_sigmoid(Scalar x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

/// Neumaier-compensated accumulator for probability-domain sums.
template <typename Scalar>
class CompensatedSum {
 public:
  void add(Scalar v) {
    const Scalar t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  Scalar value() const { return sum_ + comp_; }

 private:
  Scalar sum_ = 0;
  Scalar comp_ = 0;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.derived().array().isFinite().all();
}

}  // namespace hat
