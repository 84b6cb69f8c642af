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

// Dense double-precision kernels. Storage and products are delegated to
// Eigen; every entry point checks shapes and throws UsageError on mismatch.

#ifndef GLAD_MATRIX_H_
#define GLAD_MATRIX_H_

#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace glad::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string ShapeString(const Matrix& m);

Matrix MatMul(const Matrix& a, const Matrix& b);
Matrix Add(const Matrix& a, const Matrix& b);
Matrix Scale(const Matrix& a, double s);
Matrix Transpose(const Matrix& a);
Matrix ConcatCols(const Matrix& a, const Matrix& b);
Matrix Relu(const Matrix& a);
Matrix Sigmoid(const Matrix& a);
// Row-wise softmax; each row max is subtracted before exponentiation.
Matrix SoftmaxRows(const Matrix& a);
// Row-wise softmax restricted to entries where `allowed` is true; the
// remaining entries are exactly 0. Every row needs one allowed entry.
Matrix MaskedSoftmaxRows(const Matrix& a, const Mask& allowed);
// Column-wise maximum as a 1 x cols row vector.
Matrix MaxPoolCols(const Matrix& a);
double L2NormSq(const Matrix& a);

double SigmoidScalar(double x);

bool AllFinite(const Matrix& a);

}  // namespace glad::nn

#endif  // GLAD_MATRIX_H_
