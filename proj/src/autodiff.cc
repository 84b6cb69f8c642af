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

#include "glad/autodiff.h"

#include <algorithm>
#include <cmath>

#include "glad/common.h"

namespace glad::nn {
namespace {

Tape& TapeOf(const Var& v) {
  if (!v.valid()) throw UsageError("operation on an unbound Var");
  return *v.tape();
}

Tape& SameTape(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw UsageError("operands recorded on different tapes");
  return TapeOf(a);
}

int NextId(const Tape& tape) { return static_cast<int>(tape.size()); }

void RequireSameShape(const char* op, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw UsageError(std::string(op) + ": shape mismatch " + ShapeString(a.value()) + " vs " +
                     ShapeString(b.value()));
  }
}

}  // namespace

const Matrix& Var::value() const { return TapeOf(*this).value(id_); }
Matrix Var::grad() const { return TapeOf(*this).grad(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw UsageError("scalar(): node is not 1x1");
  return v(0, 0);
}

Var Tape::Constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), false, false, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::Parameter(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), true, false, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::Push(Matrix value, std::initializer_list<Var> parents, BackwardFn backward) {
  return Push(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
              std::move(backward));
}

Var Tape::Push(Matrix value, std::span<const Var> parents, BackwardFn backward) {
  bool wants = false;
  for (const Var& p : parents) {
    if (p.tape() != this) throw UsageError("operand recorded on a different tape");
    wants = wants || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), Matrix(), wants, false,
                        wants ? std::move(backward) : nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix& Tape::MutableGrad(const Var& v) {
  Node& node = nodes_[v.id()];
  if (!node.has_grad) {
    node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
    node.has_grad = true;
  }
  return node.grad;
}

void Tape::Accumulate(const Var& v, const Matrix& delta) {
  if (!nodes_[v.id()].requires_grad) return;
  MutableGrad(v) += delta;
}

Matrix Tape::grad(int id) const {
  const Node& node = nodes_[id];
  if (node.has_grad) return node.grad;
  return Matrix::Zero(node.value.rows(), node.value.cols());
}

void Tape::Backward(Var loss) {
  if (loss.tape() != this) throw UsageError("Backward: loss recorded on a different tape");
  if (loss.rows() != 1 || loss.cols() != 1) throw UsageError("Backward: loss must be 1x1");
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  MutableGrad(loss)(0, 0) = 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    Node& node = nodes_[id];
    if (node.has_grad && node.backward) node.backward(*this, node.grad);
  }
}

Var MatMul(const Var& a, const Var& b) {
  Tape& t = SameTape(a, b);
  Matrix out = nn::MatMul(a.value(), b.value());
  return t.Push(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.Wants(a)) t.MutableGrad(a).noalias() += g * b.value().transpose();
    if (t.Wants(b)) t.MutableGrad(b).noalias() += a.value().transpose() * g;
  });
}

Var MatMulTransB(const Var& a, const Var& b) {
  Tape& t = SameTape(a, b);
  if (a.cols() != b.cols()) {
    throw UsageError("matmul_trans_b: shape mismatch " + ShapeString(a.value()) + " vs " +
                     ShapeString(b.value()));
  }
  Matrix out(a.rows(), b.rows());
  out.noalias() = a.value() * b.value().transpose();
  return t.Push(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.Wants(a)) t.MutableGrad(a).noalias() += g * b.value();
    if (t.Wants(b)) t.MutableGrad(b).noalias() += g.transpose() * a.value();
  });
}

Var Add(const Var& a, const Var& b) {
  Tape& t = SameTape(a, b);
  RequireSameShape("add", a, b);
  return t.Push(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.Accumulate(a, g);
    t.Accumulate(b, g);
  });
}

Var Sub(const Var& a, const Var& b) {
  Tape& t = SameTape(a, b);
  RequireSameShape("sub", a, b);
  return t.Push(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.Accumulate(a, g);
    if (t.Wants(b)) t.MutableGrad(b) -= g;
  });
}

Var Mul(const Var& a, const Var& b) {
  Tape& t = SameTape(a, b);
  RequireSameShape("mul", a, b);
  Matrix out = a.value().cwiseProduct(b.value());
  return t.Push(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.Wants(a)) t.MutableGrad(a) += g.cwiseProduct(b.value());
    if (t.Wants(b)) t.MutableGrad(b) += g.cwiseProduct(a.value());
  });
}

Var AddRowBroadcast(const Var& a, const Var& row) {
  Tape& t = SameTape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw UsageError("add_row_broadcast: shape mismatch " + ShapeString(a.value()) + " vs " +
                     ShapeString(row.value()));
  }
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return t.Push(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.Accumulate(a, g);
    if (t.Wants(row)) t.MutableGrad(row) += g.colwise().sum();
  });
}

Var Scale(const Var& a, double s) {
  Tape& t = TapeOf(a);
  return t.Push(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) { t.MutableGrad(a) += g * s; });
}

Var AddScalar(const Var& a, double s) {
  Tape& t = TapeOf(a);
  Matrix out = a.value().array() + s;
  return t.Push(std::move(out), {a}, [a](Tape& t, const Matrix& g) { t.Accumulate(a, g); });
}

Var ScaleRows(const Var& a, const Matrix& weights) {
  Tape& t = TapeOf(a);
  if (weights.size() != a.rows()) throw UsageError("scale_rows: one weight per row required");
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(), weights.size());
  Matrix out = a.value().array().colwise() * w.array();
  return t.Push(std::move(out), {a}, [a, w](Tape& t, const Matrix& g) {
    t.MutableGrad(a) += (g.array().colwise() * w.array()).matrix();
  });
}

Var Transpose(const Var& a) {
  Tape& t = TapeOf(a);
  return t.Push(a.value().transpose(), {a},
                [a](Tape& t, const Matrix& g) { t.MutableGrad(a) += g.transpose(); });
}

Var Relu(const Var& a) {
  Tape& t = TapeOf(a);
  return t.Push(nn::Relu(a.value()), {a}, [a](Tape& t, const Matrix& g) {
    t.MutableGrad(a) += (a.value().array() > 0.0).select(g, 0.0).matrix();
  });
}

Var Sigmoid(const Var& a) {
  Tape& t = TapeOf(a);
  const int self = NextId(t);
  return t.Push(nn::Sigmoid(a.value()), {a}, [a, self](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(self);
    t.MutableGrad(a) += (g.array() * y.array() * (1.0 - y.array())).matrix();
  });
}

namespace {

Var SoftmaxBackwardNode(Tape& t, const Var& a, Matrix probs) {
  const int self = NextId(t);
  return t.Push(std::move(probs), {a}, [a, self](Tape& t, const Matrix& g) {
    const Matrix& p = t.value(self);
    const Eigen::VectorXd dot = g.cwiseProduct(p).rowwise().sum();
    t.MutableGrad(a) += (p.array() * (g.colwise() - dot).array()).matrix();
  });
}

}  // namespace

Var SoftmaxRows(const Var& a) {
  Tape& t = TapeOf(a);
  return SoftmaxBackwardNode(t, a, nn::SoftmaxRows(a.value()));
}

Var MaskedSoftmaxRows(const Var& a, std::shared_ptr<const Mask> allowed) {
  Tape& t = TapeOf(a);
  return SoftmaxBackwardNode(t, a, nn::MaskedSoftmaxRows(a.value(), *allowed));
}

Var GroupedAttention(const Var& q, const Var& k, const Var& v,
                     std::shared_ptr<const AttentionLayout> layout, double scale) {
  Tape& t = SameTape(q, k);
  SameTape(k, v);
  if (q.cols() != k.cols() || k.rows() != v.rows()) {
    throw UsageError("grouped_attention: shape mismatch " + ShapeString(q.value()) + ", " +
                     ShapeString(k.value()) + ", " + ShapeString(v.value()));
  }
  Eigen::Index next = 0;
  for (const AttentionGroup& g : *layout) {
    if (g.q_begin != next || g.q_end <= g.q_begin || g.k_begin < 0 || g.k_end <= g.k_begin ||
        g.k_end > k.rows()) {
      throw UsageError("grouped_attention: groups must tile the queries with valid key ranges");
    }
    next = g.q_end;
  }
  if (next != q.rows()) throw UsageError("grouped_attention: groups do not cover every query");

  Matrix out(q.rows(), v.cols());
  auto probs = std::make_shared<std::vector<Matrix>>();
  probs->reserve(layout->size());
  for (const AttentionGroup& g : *layout) {
    Matrix a(g.q_end - g.q_begin, g.k_end - g.k_begin);
    a.noalias() = q.value().middleRows(g.q_begin, a.rows()) *
                  k.value().middleRows(g.k_begin, a.cols()).transpose();
    a *= scale;
    a = nn::SoftmaxRows(a);
    out.middleRows(g.q_begin, a.rows()).noalias() = a * v.value().middleRows(g.k_begin, a.cols());
    probs->push_back(std::move(a));
  }
  return t.Push(std::move(out), {q, k, v},
                [q, k, v, layout, probs, scale](Tape& t, const Matrix& upstream) {
                  Matrix* gq = t.Wants(q) ? &t.MutableGrad(q) : nullptr;
                  Matrix* gk = t.Wants(k) ? &t.MutableGrad(k) : nullptr;
                  Matrix* gv = t.Wants(v) ? &t.MutableGrad(v) : nullptr;
                  for (size_t i = 0; i < layout->size(); ++i) {
                    const AttentionGroup& g = (*layout)[i];
                    const Matrix& a = (*probs)[i];
                    const auto nq = a.rows();
                    const auto nk = a.cols();
                    const auto go = upstream.middleRows(g.q_begin, nq);
                    if (gv) gv->middleRows(g.k_begin, nk).noalias() += a.transpose() * go;
                    if (!gq && !gk) continue;
                    Matrix da(nq, nk);
                    da.noalias() = go * v.value().middleRows(g.k_begin, nk).transpose();
                    const Eigen::VectorXd dot = da.cwiseProduct(a).rowwise().sum();
                    const Matrix ds = scale * a.cwiseProduct(da.colwise() - dot);
                    if (gq) {
                      gq->middleRows(g.q_begin, nq).noalias() +=
                          ds * k.value().middleRows(g.k_begin, nk);
                    }
                    if (gk) {
                      gk->middleRows(g.k_begin, nk).noalias() +=
                          ds.transpose() * q.value().middleRows(g.q_begin, nq);
                    }
                  }
                });
}

Var ConcatCols(const Var& a, const Var& b) {
  Tape& t = SameTape(a, b);
  const Eigen::Index left = a.cols();
  return t.Push(nn::ConcatCols(a.value(), b.value()), {a, b},
                [a, b, left](Tape& t, const Matrix& g) {
                  if (t.Wants(a)) t.MutableGrad(a) += g.leftCols(left);
                  if (t.Wants(b)) t.MutableGrad(b) += g.rightCols(g.cols() - left);
                });
}

Var ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("concat_rows: no inputs");
  Tape& t = TapeOf(parts.front());
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw UsageError("concat_rows: column count mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var> owned(parts.begin(), parts.end());
  return t.Push(std::move(out), parts, [owned](Tape& t, const Matrix& g) {
    Eigen::Index r = 0;
    for (const Var& p : owned) {
      if (t.Wants(p)) t.MutableGrad(p) += g.middleRows(r, p.rows());
      r += p.rows();
    }
  });
}

Var GatherRows(const Var& a, std::vector<Eigen::Index> rows) {
  Tape& t = TapeOf(a);
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.rows()) throw UsageError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  return t.Push(std::move(out), {a}, [a, rows = std::move(rows)](Tape& t, const Matrix& g) {
    Matrix& ga = t.MutableGrad(a);
    for (size_t i = 0; i < rows.size(); ++i) ga.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

Var SpMM(std::shared_ptr<const SparseMatrix> p, const Var& a) {
  Tape& t = TapeOf(a);
  if (p->cols() != a.rows()) throw UsageError("spmm: shape mismatch");
  Matrix out(p->rows(), a.cols());
  out.noalias() = (*p) * a.value();
  return t.Push(std::move(out), {a}, [a, p](Tape& t, const Matrix& g) {
    t.MutableGrad(a).noalias() += p->transpose() * g;
  });
}

namespace {

// Row index of the column max within [begin, end); ties keep the lowest row.
std::vector<Eigen::Index> ArgMaxCols(const Matrix& a, Eigen::Index begin, Eigen::Index end) {
  std::vector<Eigen::Index> arg(static_cast<size_t>(a.cols()), begin);
  for (Eigen::Index r = begin + 1; r < end; ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (a(r, c) > a(arg[c], c)) arg[c] = r;
    }
  }
  return arg;
}

}  // namespace

Var MaxPoolCols(const Var& a) {
  return SegmentMaxPool(a, {0, a.rows()});
}

Var SegmentMaxPool(const Var& a, std::vector<Eigen::Index> offsets) {
  Tape& t = TapeOf(a);
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != a.rows()) {
    throw UsageError("segment_maxpool: offsets must span all rows");
  }
  const size_t segments = offsets.size() - 1;
  std::vector<std::vector<Eigen::Index>> args(segments);
  Matrix out(static_cast<Eigen::Index>(segments), a.cols());
  for (size_t s = 0; s < segments; ++s) {
    if (offsets[s + 1] <= offsets[s]) throw UsageError("segment_maxpool: empty segment");
    args[s] = ArgMaxCols(a.value(), offsets[s], offsets[s + 1]);
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      out(static_cast<Eigen::Index>(s), c) = a.value()(args[s][c], c);
    }
  }
  return t.Push(std::move(out), {a}, [a, args = std::move(args)](Tape& t, const Matrix& g) {
    Matrix& ga = t.MutableGrad(a);
    for (size_t s = 0; s < args.size(); ++s) {
      for (Eigen::Index c = 0; c < ga.cols(); ++c) {
        ga(args[s][c], c) += g(static_cast<Eigen::Index>(s), c);
      }
    }
  });
}

Var RowSquaredDistance(const Var& a, const Matrix& center) {
  Tape& t = TapeOf(a);
  if (center.rows() != 1 || center.cols() != a.cols()) {
    throw UsageError("row_squared_distance: center must be 1 x cols");
  }
  Matrix diff = a.value().rowwise() - center.row(0);
  Matrix out = diff.rowwise().squaredNorm();
  return t.Push(std::move(out), {a}, [a, diff = std::move(diff)](Tape& t, const Matrix& g) {
    t.MutableGrad(a) += 2.0 * (diff.array().colwise() * g.col(0).array()).matrix();
  });
}

Var Sum(const Var& a) {
  Tape& t = TapeOf(a);
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.Push(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.MutableGrad(a).array() += g(0, 0);
  });
}

Var Mean(const Var& a) {
  if (a.value().size() == 0) throw UsageError("mean of an empty matrix");
  return Scale(Sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var SquaredNorm(const Var& a) {
  Tape& t = TapeOf(a);
  Matrix out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  return t.Push(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.MutableGrad(a) += 2.0 * g(0, 0) * a.value();
  });
}

GradResult Gradients(const LossBuilder& build, std::span<const Matrix> params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Matrix& p : params) vars.push_back(tape.Parameter(p));
  Var loss = build(tape, vars);
  tape.Backward(loss);
  GradResult result;
  result.loss = loss.scalar();
  for (const Var& v : vars) result.grads.push_back(v.grad());
  return result;
}

double GradCheck(const LossBuilder& build, std::vector<Matrix> params, double eps) {
  const GradResult analytic = Gradients(build, params);
  auto evaluate = [&]() {
    Tape tape;
    std::vector<Var> vars;
    for (const Matrix& p : params) vars.push_back(tape.Constant(p));
    return build(tape, vars).scalar();
  };
  double worst = 0.0;
  for (size_t k = 0; k < params.size(); ++k) {
    for (Eigen::Index i = 0; i < params[k].size(); ++i) {
      double& x = params[k].data()[i];
      const double saved = x;
      x = saved + eps;
      const double plus = evaluate();
      x = saved - eps;
      const double minus = evaluate();
      x = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double exact = analytic.grads[k].data()[i];
      const double denom = std::max(1e-8, std::abs(exact) + std::abs(numeric));
      worst = std::max(worst, std::abs(exact - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace glad::nn
