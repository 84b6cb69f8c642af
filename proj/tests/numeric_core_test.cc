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

#include <cmath>
#include <memory>
#include <vector>

#include "glad/autodiff.h"
#include "glad/common.h"
#include "glad/matrix.h"
#include "gtest/gtest.h"

namespace glad::nn {
namespace {

Matrix Random(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Uniform(-scale, scale);
  return m;
}

TEST(Kernels, Identities) {
  Rng rng(1);
  const Matrix b = Random(3, 4, rng);
  EXPECT_EQ(MatMul(Matrix::Identity(3, 3), b), b);
  EXPECT_EQ(SigmoidScalar(0.0), 0.5);
  EXPECT_EQ(Sigmoid(Matrix::Zero(2, 2)), Matrix::Constant(2, 2, 0.5));
  Matrix m(2, 2);
  m << 1, 4, 3, 2;
  Matrix want(1, 2);
  want << 3, 4;
  EXPECT_EQ(MaxPoolCols(m), want);
  EXPECT_EQ(L2NormSq(m), 30.0);
  EXPECT_EQ(Transpose(Transpose(b)), b);
  EXPECT_EQ(ConcatCols(b, b).cols(), 8);
  EXPECT_EQ(Relu(Scale(Matrix::Ones(1, 2), -1.0)), Matrix::Zero(1, 2));
}

TEST(Kernels, ShapeMismatchThrows) {
  EXPECT_THROW(MatMul(Matrix::Zero(2, 3), Matrix::Zero(2, 3)), UsageError);
  EXPECT_THROW(Add(Matrix::Zero(2, 3), Matrix::Zero(3, 2)), UsageError);
  EXPECT_THROW(ConcatCols(Matrix::Zero(2, 3), Matrix::Zero(3, 3)), UsageError);
  EXPECT_THROW(MaxPoolCols(Matrix::Zero(0, 3)), UsageError);
}

TEST(Kernels, SoftmaxIsStableAndNormalized) {
  Matrix a(2, 3);
  a << 1000, 1001, 1002, -5, 0, 5;
  const Matrix s = SoftmaxRows(a);
  EXPECT_TRUE(AllFinite(s));
  for (Eigen::Index r = 0; r < 2; ++r) EXPECT_NEAR(s.row(r).sum(), 1.0, 1e-15);
  EXPECT_NEAR(s(0, 2), 1.0 / (1.0 + std::exp(-1.0) + std::exp(-2.0)), 1e-15);
}

TEST(Kernels, MaskedSoftmaxZerosDisallowed) {
  Matrix a = Matrix::Zero(2, 3);
  Mask allowed(2, 3);
  allowed << true, false, false, true, true, false;
  const Matrix s = MaskedSoftmaxRows(a, allowed);
  EXPECT_EQ(s(0, 0), 1.0);
  EXPECT_EQ(s(0, 1), 0.0);
  EXPECT_EQ(s(1, 1), 0.5);
  EXPECT_EQ(s(1, 2), 0.0);
  Mask none = Mask::Constant(2, 3, false);
  EXPECT_THROW(MaskedSoftmaxRows(a, none), UsageError);
}

TEST(Kernels, FiniteInputsStayFinite) {
  Rng rng(3);
  const Matrix a = Random(5, 5, rng, 50.0);
  EXPECT_TRUE(AllFinite(Sigmoid(a)));
  EXPECT_TRUE(AllFinite(SoftmaxRows(a)));
  EXPECT_TRUE(AllFinite(MatMul(a, a)));
}

TEST(GradCheck, QuadraticIsExact) {
  Rng rng(4);
  auto build = [](Tape&, std::span<const Var> p) { return SquaredNorm(p[0]); };
  EXPECT_LT(GradCheck(build, {Random(3, 4, rng)}), 1e-7);
  const GradResult g = Gradients(build, std::vector<Matrix>{Matrix::Constant(1, 2, 3.0)});
  EXPECT_EQ(g.loss, 18.0);
  EXPECT_EQ(g.grads[0], Matrix::Constant(1, 2, 6.0));
}

TEST(GradCheck, SigmoidChainDepthThree) {
  Rng rng(5);
  auto build = [](Tape&, std::span<const Var> p) {
    return Sum(Sigmoid(MatMul(Sigmoid(MatMul(Sigmoid(MatMul(p[0], p[1])), p[2])), p[3])));
  };
  const std::vector<Matrix> params = {Random(2, 3, rng), Random(3, 3, rng), Random(3, 3, rng),
                                      Random(3, 2, rng)};
  EXPECT_LT(GradCheck(build, params), 1e-5);
}

TEST(GradCheck, EveryOperation) {
  Rng rng(6);
  const Matrix weights = Random(4, 1, rng);
  auto center = std::make_shared<Matrix>(Random(1, 3, rng));
  auto mask = std::make_shared<Mask>(4, 4);
  *mask << true, false, false, false, true, true, false, false, true, true, true, false, true,
      true, true, true;
  auto sparse = std::make_shared<SparseMatrix>(4, 4);
  sparse->insert(0, 0) = 0.5;
  sparse->insert(0, 2) = -1.5;
  sparse->insert(2, 1) = 2.0;
  sparse->insert(3, 3) = 1.0;
  sparse->makeCompressed();
  auto build = [&](Tape& tape, std::span<const Var> p) {
    const Var& a = p[0];  // 4 x 3
    const Var& b = p[1];  // 3 x 3
    const Var& row = p[2];  // 1 x 3
    Var x = MatMul(a, b);
    x = Add(x, MatMulTransB(a, b));
    x = Sub(x, Mul(a, a));
    x = AddRowBroadcast(x, row);
    x = ScaleRows(AddScalar(Scale(x, 0.7), 0.1), weights);
    Var y = ConcatCols(Sigmoid(x), Transpose(Transpose(x)));
    Var att = MatMul(MaskedSoftmaxRows(MatMul(a, Transpose(a)), mask), x);
    Var soft = MatMul(SoftmaxRows(MatMulTransB(x, a)), a);
    Var stacked = ConcatRows(std::vector<Var>{att, soft});
    Var picked = GatherRows(stacked, {7, 0, 3, 3});
    Var sp = SpMM(sparse, picked);
    Var dist = RowSquaredDistance(sp, *center);
    Var pooled = SegmentMaxPool(sp, {0, 2, 4});
    (void)tape;
    return Add(Add(Mean(dist), Sum(MaxPoolCols(pooled))), Add(Mean(y), SquaredNorm(Relu(x))));
  };
  const std::vector<Matrix> params = {Random(4, 3, rng), Random(3, 3, rng), Random(1, 3, rng)};
  EXPECT_LT(GradCheck(build, params), 1e-6);
}

// Dense oracle: one masked softmax over the whole score matrix.
Matrix DenseAttention(const Matrix& q, const Matrix& k, const Matrix& v,
                      const AttentionLayout& layout, double scale) {
  Mask allowed = Mask::Constant(q.rows(), k.rows(), false);
  for (const AttentionGroup& g : layout) {
    allowed.block(g.q_begin, g.k_begin, g.q_end - g.q_begin, g.k_end - g.k_begin).setConstant(true);
  }
  return MatMul(MaskedSoftmaxRows(Scale(MatMul(q, Transpose(k)), scale), allowed), v);
}


TEST(GroupedAttention, MatchesDenseMaskedSoftmax) {
  Rng rng(7);
  const Matrix q = Random(6, 4, rng);
  const Matrix k = Random(5, 4, rng);
  const Matrix v = Random(5, 3, rng);
  auto layout = std::make_shared<AttentionLayout>(
      AttentionLayout{{0, 2, 0, 1}, {2, 3, 0, 3}, {3, 6, 1, 5}});
  Tape tape;
  const Var out = GroupedAttention(tape.Constant(q), tape.Constant(k), tape.Constant(v), layout, 0.5);
  EXPECT_TRUE(out.value().isApprox(DenseAttention(q, k, v, *layout, 0.5), 1e-13));
}

TEST(GroupedAttention, GradCheck) {
  Rng rng(8);
  auto layout = std::make_shared<AttentionLayout>(AttentionLayout{{0, 1, 0, 1}, {1, 4, 0, 3}});
  auto build = [&](Tape&, std::span<const Var> p) {
    return SquaredNorm(GroupedAttention(p[0], p[1], p[2], layout, 0.8));
  };
  EXPECT_LT(GradCheck(build, {Random(4, 3, rng), Random(3, 3, rng), Random(3, 2, rng)}), 1e-6);
}

TEST(GroupedAttention, GroupsMustTileQueries) {
  Tape tape;
  const Var q = tape.Constant(Matrix::Zero(3, 2));
  auto gap = std::make_shared<AttentionLayout>(AttentionLayout{{0, 1, 0, 1}, {2, 3, 0, 1}});
  EXPECT_THROW(GroupedAttention(q, q, q, gap, 1.0), UsageError);
  auto empty_keys = std::make_shared<AttentionLayout>(AttentionLayout{{0, 3, 1, 1}});
  EXPECT_THROW(GroupedAttention(q, q, q, empty_keys, 1.0), UsageError);
}

TEST(Conventions, ReluAtZeroAndMaxPoolTies) {
  const GradResult relu = Gradients(
      [](Tape&, std::span<const Var> p) { return Sum(Relu(p[0])); },
      std::vector<Matrix>{Matrix::Zero(1, 3)});
  EXPECT_EQ(relu.grads[0], Matrix::Zero(1, 3));
  const GradResult pool = Gradients(
      [](Tape&, std::span<const Var> p) { return Sum(MaxPoolCols(p[0])); },
      std::vector<Matrix>{Matrix::Ones(3, 2)});
  Matrix want = Matrix::Zero(3, 2);
  want.row(0).setOnes();
  EXPECT_EQ(pool.grads[0], want);
}

TEST(Tape, BackwardNeedsScalarLoss) {
  Tape tape;
  const Var p = tape.Parameter(Matrix::Ones(2, 2));
  EXPECT_THROW(tape.Backward(p), UsageError);
  const Var loss = Sum(p);
  tape.Backward(loss);
  EXPECT_EQ(p.grad(), Matrix::Ones(2, 2));
}

TEST(Tape, GradientsAreDeterministic) {
  Rng rng(9);
  const std::vector<Matrix> params = {Random(5, 4, rng), Random(4, 4, rng)};
  auto build = [](Tape&, std::span<const Var> p) {
    return Sum(SoftmaxRows(MatMul(Relu(MatMul(p[0], p[1])), Transpose(p[1]))));
  };
  const GradResult a = Gradients(build, params);
  const GradResult b = Gradients(build, params);
  EXPECT_EQ(a.loss, b.loss);
  for (size_t i = 0; i < a.grads.size(); ++i) EXPECT_EQ(a.grads[i], b.grads[i]);
}

}  // namespace
}  // namespace glad::nn
