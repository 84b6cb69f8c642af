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

// Gradient-check instances shared by the unit tests and the acceptance run.

#ifndef GLAD_TESTS_GRAD_FIXTURES_H_
#define GLAD_TESTS_GRAD_FIXTURES_H_

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glad/autodiff.h"
#include "glad/common.h"
#include "glad/graph_build.h"
#include "glad/model.h"

namespace glad::testing {

inline nn::Matrix UniformMatrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  nn::Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Uniform(-scale, scale);
  return m;
}

// Events first, then user fields; edges are (event, field, w).
inline GraphSnapshot BipartiteGraph(int64_t t, int events, int fields, std::vector<Edge> edges,
                                    Rng& rng, int dim = 4) {
  GraphSnapshot g;
  g.t = t;
  for (int e = 0; e < events; ++e) {
    g.nodes.push_back({NodeKind::kEvent, std::nullopt, "event " + std::to_string(e)});
  }
  for (int f = 0; f < fields; ++f) {
    g.nodes.push_back({NodeKind::kField, FieldType::kUserName, "user" + std::to_string(f)});
  }
  g.x = UniformMatrix(events + fields, dim, rng);
  g.edges = std::move(edges);
  g.edge_labels.assign(g.edges.size(), Label::kNormal);
  g.contributors.assign(g.edges.size(), {});
  return g;
}

// relu(P X W) on a 4-node snapshot, gradients taken for both X and W.
inline double GcnLayerGradError() {
  Rng rng(31);
  const GraphSnapshot g = BipartiteGraph(0, 1, 3, {{0, 1, 1}, {0, 2, 2}, {0, 3, 1}}, rng);
  const auto p = std::make_shared<const nn::SparseMatrix>(NormalizedAdjacency(g));
  const nn::Matrix mix = UniformMatrix(4, 3, rng);
  auto build = [&](nn::Tape& tape, std::span<const nn::Var> v) {
    const nn::Var out = nn::Relu(nn::MatMul(nn::SpMM(p, v[0]), v[1]));
    return nn::Sum(nn::Mul(out, tape.Constant(mix)));
  };
  return nn::GradCheck(build, {g.x, UniformMatrix(4, 3, rng)}, 1e-5);
}

// Two snapshots of at most four nodes through the 2-layer GCN, one
// attention layer per stack, the edge head and the hinge.
inline double CompositionGradError() {
  Rng rng(27);
  ModelConfig c;
  c.input_dim = 4;
  c.hidden_dim = 3;
  c.attn_head_dim = 2;
  c.ffn_dim = 4;
  c.attn_layers = 1;
  c.short_window = 2;
  c.history_budget = 8;
  c.position_scale = 0.5;
  const ModelParams init = InitParams(c, 28);
  const std::vector<GraphSnapshot> gs = {
      BipartiteGraph(0, 1, 3, {{0, 1, 1}, {0, 2, 2}, {0, 3, 1}}, rng),
      BipartiteGraph(1, 2, 2, {{0, 2, 1}, {1, 3, 3}}, rng)};
  const std::vector<const GraphSnapshot*> ptrs = {&gs[0], &gs[1]};
  std::vector<nn::Matrix> params;
  for (const nn::Matrix* m : init.Trainable()) params.push_back(*m);
  // Non-zero biases so their gradients are exercised too.
  for (nn::Matrix& m : params) {
    if (m.rows() == 1 && m.cols() != 6) m = UniformMatrix(1, m.cols(), rng, 0.1);
  }
  auto build = [&](nn::Tape& tape, std::span<const nn::Var> p) {
    ParamVars v;
    size_t k = 0;
    for (int l = 0; l < c.gcn_layers; ++l) v.gcn.push_back(p[k++]);
    for (auto* stack : {&v.attn_long, &v.attn_short}) {
      AttentionVars a{p[k], p[k + 1], p[k + 2], p[k + 3], p[k + 4], p[k + 5], p[k + 6], p[k + 7]};
      k += 8;
      stack->push_back(a);
    }
    v.w1 = p[k++];
    v.w2 = p[k++];
    const SequenceEncoding enc = EncodeSequence(tape, v, c, ptrs);
    const std::vector<Eigen::Index> pi = {0, 0, 4, 5};
    const std::vector<Eigen::Index> pj = {1, 2, 6, 7};
    const std::vector<Eigen::Index> ni = {0, 3, 5, 4};
    const std::vector<Eigen::Index> nj = {3, 1, 6, 5};
    const std::vector<double> w = {1, 2, 1, 3};
    const nn::Var pos = EdgeScores(enc.h, v, c.mu, pi, pj, w);
    const nn::Var neg = EdgeScores(enc.h, v, c.mu, ni, nj, w);
    return nn::Sum(nn::Relu(nn::AddScalar(nn::Sub(pos, neg), 0.5)));
  };
  return nn::GradCheck(build, params, 1e-5);
}

}  // namespace glad::testing

#endif  // GLAD_TESTS_GRAD_FIXTURES_H_
