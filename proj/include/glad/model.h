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

// Temporal graph encoder and edge scorer.
//
// Per snapshot, an L-layer GCN maps node attributes X_t to Z_t. Every node
// of the snapshot at window index p then receives the sinusoidal position
// embedding E_p, and two attention stacks run over the node rows:
//
//   long-term   all rows of the sequence; a row at position p attends to
//               rows at positions in (p - history_budget, p]
//   short-term  for each snapshot t, the rows of snapshots whose position
//               lies in [p_t - k + 1, p_t], causally masked; only the rows
//               of t are kept
//
// H_t = [long_t | short_t] feeds the edge score
//   f(i, j, w) = w * sigmoid(w1 . h_i + w2 . h_j - mu).

#ifndef GLAD_MODEL_H_
#define GLAD_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "glad/autodiff.h"
#include "glad/graph_build.h"
#include "glad/matrix.h"
#include "json.hpp"

namespace glad {

struct ModelConfig {
  int input_dim = 768;
  int hidden_dim = 1024;
  int gcn_layers = 2;
  int attn_layers = 2;
  // Query/key/value width of the single attention head.
  int attn_head_dim = 64;
  int ffn_dim = 256;
  int short_window = 5;
  int history_budget = 64;
  // false replaces both attention stacks by the identity (H = [Z | Z]).
  bool temporal = true;
  // Multiplier on the sinusoidal rows added to Z. Positions count windows
  // from the first graph of the encoded sequence.
  double position_scale = 0.03125;
  double mu = 0.3;

  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);
};

struct AttentionLayer {
  nn::Matrix wq, wk, wv, wo;
  nn::Matrix ff1, ff1_bias, ff2, ff2_bias;
};

struct ModelParams {
  ModelConfig config;
  std::vector<nn::Matrix> gcn;
  std::vector<AttentionLayer> attn_long;
  std::vector<AttentionLayer> attn_short;
  nn::Matrix w1;  // 1 x 2*hidden_dim
  nn::Matrix w2;  // 1 x 2*hidden_dim
  // Hypersphere state; center is empty until training sets it.
  nn::Matrix center;
  double radius_sq = 0.0;

  // Learnable matrices in a fixed order, with whether each one falls under
  // the L2 penalty (weights yes, biases no).
  std::vector<nn::Matrix*> Trainable();
  std::vector<const nn::Matrix*> Trainable() const;
  std::vector<bool> Regularized() const;
};

// Glorot-uniform weights, zero biases.
ModelParams InitParams(const ModelConfig& config, uint64_t seed);

// Versioned binary model file. `fingerprint` is opaque metadata (the
// training configuration) stored alongside the weights.
void SaveModel(const std::string& path, const ModelParams& params,
               const nlohmann::json& fingerprint);
ModelParams LoadModel(const std::string& path, nlohmann::json* fingerprint = nullptr);

// ---- Building blocks on plain matrices ----

// relu(D^-1/2 A D^-1/2 H W) for A with self-loops and its degree matrix.
nn::Matrix GcnLayer(const nn::Matrix& h, const nn::Matrix& a_hat, const nn::Matrix& d_hat,
                    const nn::Matrix& w);
// D^-1/2 A D^-1/2 from the dense self-looped adjacency.
nn::Matrix NormalizePropagation(const nn::Matrix& a_hat, const nn::Matrix& d_hat);

// Z_t after params.gcn; 0 rows for an empty snapshot.
nn::Matrix EncodeSnapshot(const GraphSnapshot& snapshot, const ModelParams& params);

// Component 2i = sin(p / 10000^(2i/d)), 2i+1 = cos(p / 10000^(2i/d)).
std::vector<double> PositionEmbedding(int64_t p, int d);

// Attention stack over tagged rows. Row r may attend to row c iff
// positions[c] <= positions[r] and positions[c] > positions[r] - budget.
nn::Matrix SetTransformer(const nn::Matrix& rows, std::span<const int64_t> positions,
                          std::span<const AttentionLayer> layers, int64_t budget);

double EdgeScore(const nn::Matrix& h, const Edge& edge, const nn::Matrix& w1,
                 const nn::Matrix& w2, double mu);

// ---- Differentiable sequence forward pass ----

struct AttentionVars {
  nn::Var wq, wk, wv, wo, ff1, ff1_bias, ff2, ff2_bias;
};

struct ParamVars {
  std::vector<nn::Var> gcn;
  std::vector<AttentionVars> attn_long;
  std::vector<AttentionVars> attn_short;
  nn::Var w1, w2;
  // Same order as ModelParams::Trainable().
  std::vector<nn::Var> all;
};

// Binds the parameters onto `tape`; as parameters when `trainable`,
// otherwise as constants.
ParamVars BindParams(nn::Tape& tape, const ModelParams& params, bool trainable);

nn::Var AttentionStack(nn::Tape& tape, std::span<const AttentionVars> layers, const nn::Var& rows,
                       std::span<const int64_t> positions, int64_t budget,
                       std::span<const Eigen::Index> query_rows);

struct SequenceEncoding {
  nn::Var z;  // stacked GCN outputs
  nn::Var h;  // stacked [long | short] rows, 2*hidden_dim columns
  // Row range of graph g is [offsets[g], offsets[g+1]).
  std::vector<Eigen::Index> offsets;
  std::vector<int64_t> positions;  // window index per graph
};

// Encodes the non-empty snapshots of `graphs` in order. Empty snapshots
// are skipped; positions stay equal to the window indices.
SequenceEncoding EncodeSequence(nn::Tape& tape, const ParamVars& vars,
                                const ModelConfig& config,
                                std::span<const GraphSnapshot* const> graphs);

// Scores of (row_i, row_j, w) triples against the stacked encoding rows.
nn::Var EdgeScores(const nn::Var& h, const ParamVars& vars, double mu,
                   std::span<const Eigen::Index> rows_i, std::span<const Eigen::Index> rows_j,
                   std::span<const double> weights);

// Non-differentiable convenience: H_t for every non-empty snapshot.
std::vector<nn::Matrix> TemporalEncode(const ModelParams& params,
                                       std::span<const GraphSnapshot* const> graphs);

}  // namespace glad

#endif  // GLAD_MODEL_H_
