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

#include "glad/matrix.h"

#include <cmath>
#include <limits>

#include "glad/common.h"

namespace glad::nn {
namespace {

void Require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw UsageError(std::string(op) + ": shape mismatch " + ShapeString(a) + " vs " +
                     ShapeString(b));
  }
}

}  // namespace

std::string ShapeString(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

Matrix MatMul(const Matrix& a, const Matrix& b) {
  Require(a.cols() == b.rows(), "matmul", a, b);
  Matrix out(a.rows(), b.cols());
  out.noalias() = a * b;
  return out;
}

Matrix Add(const Matrix& a, const Matrix& b) {
  Require(a.rows() == b.rows() && a.cols() == b.cols(), "add", a, b);
  return a + b;
}

Matrix Scale(const Matrix& a, double s) { return a * s; }

Matrix Transpose(const Matrix& a) { return a.transpose(); }

Matrix ConcatCols(const Matrix& a, const Matrix& b) {
  Require(a.rows() == b.rows(), "concat_cols", a, b);
  Matrix out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

Matrix Relu(const Matrix& a) { return a.cwiseMax(0.0); }

double SigmoidScalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix Sigmoid(const Matrix& a) { return a.unaryExpr([](double x) { return SigmoidScalar(x); }); }

Matrix SoftmaxRows(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double max = a.row(r).maxCoeff();
    out.row(r) = (a.row(r).array() - max).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Matrix MaskedSoftmaxRows(const Matrix& a, const Mask& allowed) {
  if (allowed.rows() != a.rows() || allowed.cols() != a.cols()) {
    throw UsageError("masked softmax: mask shape does not match " + ShapeString(a));
  }
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    double max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (allowed(r, c)) max = std::max(max, a(r, c));
    }
    if (!std::isfinite(max)) throw UsageError("masked softmax: row without allowed entries");
    double total = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (allowed(r, c)) {
        out(r, c) = std::exp(a(r, c) - max);
        total += out(r, c);
      }
    }
    out.row(r) /= total;
  }
  return out;
}

Matrix MaxPoolCols(const Matrix& a) {
  if (a.rows() == 0) throw UsageError("maxpool_cols: empty input");
  return a.colwise().maxCoeff();
}

double L2NormSq(const Matrix& a) { return a.squaredNorm(); }

bool AllFinite(const Matrix& a) { return a.allFinite(); }

}  // namespace glad::nn
