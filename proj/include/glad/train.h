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

// One-class training: sampled negative edges under a margin loss, plus a
// hypersphere loss on max-pooled graph representations.

#ifndef GLAD_TRAIN_H_
#define GLAD_TRAIN_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glad/common.h"
#include "glad/graph_build.h"
#include "glad/model.h"
#include "json.hpp"

namespace glad {

struct TrainConfig {
  double lr = 1e-3;
  int epochs = 100;
  double gamma = 0.5;
  double mu = 0.3;
  double alpha = 1.0;
  double lambda = 5e-7;
  int k = 5;
  double percentile = 0.95;
  double svdd_c_weight = 1.0;
  uint64_t seed = 0;
  int history_budget = 64;
  int negatives_per_edge = 1;
  // 0 trains on the whole sequence with one step per epoch; otherwise one
  // step per contiguous chunk of this many windows.
  int batch_windows = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  nlohmann::json ToJson() const;
  // `seed` is required; invariants are checked (UsageError).
  static TrainConfig FromJson(const nlohmann::json& j);
  void Validate() const;
};

struct NegativeEdge {
  int i = 0;
  int j = 0;
  int64_t w = 1;
  bool replaced_i = false;
  // Retries ran out and the pair duplicates an edge or is a self-pair.
  bool flagged = false;
};

// Replaces i with probability d_i / (d_i + d_j), else j, by a uniform other
// node. nullopt for snapshots with fewer than 3 nodes.
std::optional<NegativeEdge> SampleNegative(const Edge& edge, const GraphSnapshot& snapshot,
                                           std::span<const double> degrees, Rng& rng);

// Hinge on one pair; nullopt when f_pos > f_neg (discarded).
std::optional<double> PairLoss(double f_pos, double f_neg, double gamma);

struct PairLossSummary {
  std::vector<bool> retained;
  double total = 0.0;
};
PairLossSummary PairLosses(std::span<const double> f_pos, std::span<const double> f_neg,
                           double gamma);

// Column-wise max over node rows.
nn::Matrix GraphRepr(const nn::Matrix& h);

struct SvddState {
  nn::Matrix center;
  double radius_sq = 0.0;
};
// Mean of the representation rows.
nn::Matrix SvddCenter(const nn::Matrix& reprs);
// R^2 as the nearest-rank percentile of squared distances.
double SvddRadiusSq(std::span<const double> sq_distances, double percentile);
double SvddLoss(std::span<const double> sq_distances, double radius_sq, double c_weight);

// L_e + alpha L_g + lambda/2 sum ||W||^2 over the listed matrices.
double TotalLoss(double edge_loss, double graph_loss, std::span<const nn::Matrix* const> weights,
                 double alpha, double lambda);
double TotalLoss(double edge_loss, double graph_loss, const ModelParams& params, double alpha,
                 double lambda);

// Adam with decoupled weight decay on the flagged matrices.
class AdamW {
 public:
  AdamW(double lr, double beta1, double beta2, double eps, double weight_decay);
  void Step(std::span<nn::Matrix* const> params, std::span<const nn::Matrix> grads,
            const std::vector<bool>& decay);
  int64_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  int64_t t_ = 0;
  std::vector<nn::Matrix> m_, v_;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double loss_edge = 0.0;
  double loss_graph = 0.0;
  double radius_sq = 0.0;
  double mean_sq_distance = 0.0;
  int64_t pairs = 0;
  int64_t retained = 0;
  int64_t flagged = 0;
  std::optional<double> val_f1;

  nlohmann::json ToJson() const;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Trains on the non-empty snapshots of `train` (already normal-only, in
// window order). `validation`, if non-empty, is scored after every epoch.
TrainResult Train(std::span<const GraphSnapshot* const> train,
                  std::span<const GraphSnapshot* const> validation, const ModelConfig& model,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace glad

#endif  // GLAD_TRAIN_H_
