/*
 * Copyright 2026 The glad Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Reverse-mode differentiation over whole matrices. A Tape records every
// op in creation order; Backward walks it in reverse and accumulates
// gradients into the nodes that depend on a parameter.
//
// Conventions at non-differentiable points: relu'(0) = 0 and max-pool
// ties route the gradient to the lowest row index.

#ifndef GLAD_AUTODIFF_H_
#define GLAD_AUTODIFF_H_

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "glad/matrix.h"

namespace glad::nn {

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Matrix grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  // Value of a 1 x 1 node.
  double scalar() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Matrix value);
  Var Parameter(Matrix value);

  // Seeds d(loss)/d(loss) = 1; `loss` must be 1 x 1.
  void Backward(Var loss);

  const Matrix& value(int id) const { return nodes_[id].value; }
  // Zero matrix for nodes that received no gradient.
  Matrix grad(int id) const;
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  size_t size() const { return nodes_.size(); }

  using BackwardFn = std::function<void(Tape&, const Matrix& upstream)>;
  Var Push(Matrix value, std::initializer_list<Var> parents, BackwardFn backward);
  Var Push(Matrix value, std::span<const Var> parents, BackwardFn backward);

  // Accumulates into the gradient of `v` if it takes part in differentiation.
  void Accumulate(const Var& v, const Matrix& delta);
  Matrix& MutableGrad(const Var& v);
  bool Wants(const Var& v) const { return nodes_[v.id()].requires_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Element-wise and linear algebra.
Var MatMul(const Var& a, const Var& b);
// a * b^T without materializing the transpose.
Var MatMulTransB(const Var& a, const Var& b);
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
// Adds a 1 x cols row to every row of `a`.
Var AddRowBroadcast(const Var& a, const Var& row);
Var Scale(const Var& a, double s);
Var AddScalar(const Var& a, double s);
// Multiplies row r of `a` by weights[r].
Var ScaleRows(const Var& a, const Matrix& weights);
Var Transpose(const Var& a);
Var Relu(const Var& a);
Var Sigmoid(const Var& a);
Var SoftmaxRows(const Var& a);
Var MaskedSoftmaxRows(const Var& a, std::shared_ptr<const Mask> allowed);

// Query rows [q_begin, q_end) attend to key/value rows [k_begin, k_end).
struct AttentionGroup {
  Eigen::Index q_begin = 0, q_end = 0;
  Eigen::Index k_begin = 0, k_end = 0;
};
using AttentionLayout = std::vector<AttentionGroup>;
// softmax(scale * q k^T) v evaluated group by group. The groups must tile
// the rows of q in order and have non-empty key ranges.
Var GroupedAttention(const Var& q, const Var& k, const Var& v,
                     std::shared_ptr<const AttentionLayout> layout, double scale);

// Structural ops.
Var ConcatCols(const Var& a, const Var& b);
Var ConcatRows(std::span<const Var> parts);
Var GatherRows(const Var& a, std::vector<Eigen::Index> rows);
// Constant sparse matrix times `a`.
Var SpMM(std::shared_ptr<const SparseMatrix> p, const Var& a);

// Reductions.
Var MaxPoolCols(const Var& a);
// Column-wise max per row segment [offsets[s], offsets[s+1]); one output
// row per segment.
Var SegmentMaxPool(const Var& a, std::vector<Eigen::Index> offsets);
// Squared distance of every row of `a` to the constant row `center`, as a
// column vector.
Var RowSquaredDistance(const Var& a, const Matrix& center);
Var Sum(const Var& a);
Var Mean(const Var& a);
Var SquaredNorm(const Var& a);

// Builds a scalar loss from parameter nodes on a fresh tape.
using LossBuilder = std::function<Var(Tape&, std::span<const Var> params)>;

struct GradResult {
  double loss = 0.0;
  std::vector<Matrix> grads;
};

// Loss value and exact gradients by reverse accumulation.
GradResult Gradients(const LossBuilder& build, std::span<const Matrix> params);

// Central-difference check of Gradients. Returns the max over coordinates
// of |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
double GradCheck(const LossBuilder& build, std::vector<Matrix> params, double eps = 1e-5);

}  // namespace glad::nn

#endif  // GLAD_AUTODIFF_H_
