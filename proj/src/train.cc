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

#include "glad/train.h"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "glad/eval.h"

namespace glad {

using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {

// Keeps the sampling stream apart from the weight initialization stream.
constexpr uint64_t kSamplingSalt = 0x5851f42d4c957f2dULL;

void CheckFinite(double value, const std::string& what, int epoch) {
  if (!std::isfinite(value)) {
    throw NumericError(fmt::format("training diverged: {} is not finite at epoch {}", what, epoch));
  }
}

std::vector<double> Column(const Matrix& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

}  // namespace

nlohmann::json TrainConfig::ToJson() const {
  return {{"lr", lr},
          {"epochs", epochs},
          {"gamma", gamma},
          {"mu", mu},
          {"alpha", alpha},
          {"lambda", lambda},
          {"k", k},
          {"percentile", percentile},
          {"svdd_c_weight", svdd_c_weight},
          {"seed", seed},
          {"history_budget", history_budget},
          {"negatives_per_edge", negatives_per_edge},
          {"batch_windows", batch_windows},
          {"beta1", beta1},
          {"beta2", beta2},
          {"adam_eps", adam_eps}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("train config must be an object");
  static const std::set<std::string> kKeys = {
      "lr",   "epochs",         "gamma",          "mu",            "alpha", "lambda",
      "k",    "percentile",     "svdd_c_weight",  "seed",          "history_budget",
      "negatives_per_edge", "batch_windows", "beta1", "beta2", "adam_eps"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw UsageError("unknown train config key: " + key);
  }
  if (!j.contains("seed")) throw UsageError("train config: seed is required");
  TrainConfig c;
  try {
    c.lr = j.value("lr", c.lr);
    c.epochs = j.value("epochs", c.epochs);
    c.gamma = j.value("gamma", c.gamma);
    c.mu = j.value("mu", c.mu);
    c.alpha = j.value("alpha", c.alpha);
    c.lambda = j.value("lambda", c.lambda);
    c.k = j.value("k", c.k);
    c.percentile = j.value("percentile", c.percentile);
    c.svdd_c_weight = j.value("svdd_c_weight", c.svdd_c_weight);
    c.seed = j.at("seed").get<uint64_t>();
    c.history_budget = j.value("history_budget", c.history_budget);
    c.negatives_per_edge = j.value("negatives_per_edge", c.negatives_per_edge);
    c.batch_windows = j.value("batch_windows", c.batch_windows);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("train config: ") + e.what());
  }
  c.Validate();
  return c;
}

void TrainConfig::Validate() const {
  auto require = [](bool ok, const char* message) {
    if (!ok) throw UsageError(std::string("train config: ") + message);
  };
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(lambda >= 0.0, "lambda must be >= 0");
  require(percentile > 0.0 && percentile <= 1.0, "percentile must lie in (0, 1]");
  require(lr > 0.0, "lr must be positive");
  require(epochs >= 1, "epochs must be >= 1");
  require(k >= 1, "k must be >= 1");
  require(history_budget >= 1, "history_budget must be >= 1");
  require(negatives_per_edge >= 1, "negatives_per_edge must be >= 1");
  require(batch_windows >= 0, "batch_windows must be >= 0");
  require(alpha >= 0.0 && svdd_c_weight >= 0.0, "alpha and svdd_c_weight must be >= 0");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "betas must lie in [0, 1)");
  require(adam_eps > 0.0, "adam_eps must be positive");
}

std::optional<NegativeEdge> SampleNegative(const Edge& edge, const GraphSnapshot& snapshot,
                                           std::span<const double> degrees, Rng& rng) {
  const int n = static_cast<int>(snapshot.node_count());
  if (n < 3) return std::nullopt;
  if (edge.i < 0 || edge.j < 0 || edge.i >= n || edge.j >= n ||
      degrees.size() != static_cast<size_t>(n)) {
    throw UsageError("negative sampling: edge or degree vector does not fit the snapshot");
  }
  const double di = degrees[static_cast<size_t>(edge.i)];
  const double dj = degrees[static_cast<size_t>(edge.j)];
  const double p = di + dj > 0.0 ? di / (di + dj) : 0.5;

  NegativeEdge out;
  out.w = edge.w;
  out.replaced_i = rng.Bernoulli(p);
  const int keep = out.replaced_i ? edge.j : edge.i;
  const int old = out.replaced_i ? edge.i : edge.j;
  constexpr int kAttempts = 1 + 10;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    auto pick = static_cast<int>(rng.Below(static_cast<uint64_t>(n - 1)));
    if (pick >= old) ++pick;
    out.i = std::min(keep, pick);
    out.j = std::max(keep, pick);
    if (out.i != out.j && !snapshot.HasEdge(out.i, out.j)) return out;
  }
  out.flagged = true;
  return out;
}

std::optional<double> PairLoss(double f_pos, double f_neg, double gamma) {
  if (f_pos > f_neg) return std::nullopt;
  return std::max(0.0, gamma + f_pos - f_neg);
}

PairLossSummary PairLosses(std::span<const double> f_pos, std::span<const double> f_neg,
                           double gamma) {
  if (f_pos.size() != f_neg.size()) throw UsageError("pair losses: score lists differ in length");
  PairLossSummary s;
  s.retained.resize(f_pos.size());
  for (size_t k = 0; k < f_pos.size(); ++k) {
    const std::optional<double> loss = PairLoss(f_pos[k], f_neg[k], gamma);
    s.retained[k] = loss.has_value();
    if (loss) s.total += *loss;
  }
  return s;
}

Matrix GraphRepr(const Matrix& h) {
  if (h.rows() == 0) throw UsageError("graph representation of an empty snapshot");
  return nn::MaxPoolCols(h);
}

Matrix SvddCenter(const Matrix& reprs) {
  if (reprs.rows() == 0) throw UsageError("hypersphere center needs at least one representation");
  return reprs.colwise().mean();
}

double SvddRadiusSq(std::span<const double> sq_distances, double percentile) {
  return NearestRankPercentile({sq_distances.begin(), sq_distances.end()}, percentile);
}

double SvddLoss(std::span<const double> sq_distances, double radius_sq, double c_weight) {
  if (sq_distances.empty()) return radius_sq;
  double slack = 0.0;
  for (double d : sq_distances) slack += std::max(0.0, d - radius_sq);
  return radius_sq + c_weight * slack / static_cast<double>(sq_distances.size());
}

double TotalLoss(double edge_loss, double graph_loss, std::span<const Matrix* const> weights,
                 double alpha, double lambda) {
  double norms = 0.0;
  for (const Matrix* w : weights) norms += w->squaredNorm();
  return edge_loss + alpha * graph_loss + 0.5 * lambda * norms;
}

double TotalLoss(double edge_loss, double graph_loss, const ModelParams& params, double alpha,
                 double lambda) {
  const std::vector<const Matrix*> all = params.Trainable();
  const std::vector<bool> reg = params.Regularized();
  std::vector<const Matrix*> weights;
  for (size_t k = 0; k < all.size(); ++k) {
    if (reg[k]) weights.push_back(all[k]);
  }
  return TotalLoss(edge_loss, graph_loss, weights, alpha, lambda);
}

AdamW::AdamW(double lr, double beta1, double beta2, double eps, double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

void AdamW::Step(std::span<Matrix* const> params, std::span<const Matrix> grads,
                 const std::vector<bool>& decay) {
  if (params.size() != grads.size() || params.size() != decay.size()) {
    throw UsageError("optimizer: parameter, gradient and decay lists differ in length");
  }
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.push_back(Matrix::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  ++t_;
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    const Matrix& g = grads[k];
    if (g.rows() != p.rows() || g.cols() != p.cols()) {
      throw UsageError("optimizer: gradient shape differs from its parameter");
    }
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g.cwiseProduct(g);
    Matrix update = (m_[k] / bias1).array() / ((v_[k] / bias2).array().sqrt() + eps_);
    if (decay[k]) update += weight_decay_ * p;
    p -= lr_ * update;
  }
}

nlohmann::json EpochLog::ToJson() const {
  return {{"epoch", epoch},
          {"loss", loss},
          {"loss_edge", loss_edge},
          {"loss_graph", loss_graph},
          {"radius_sq", radius_sq},
          {"mean_sq_distance", mean_sq_distance},
          {"pairs", pairs},
          {"retained", retained},
          {"flagged", flagged},
          {"val_f1", val_f1 ? nlohmann::json(*val_f1) : nlohmann::json(nullptr)}};
}

TrainResult Train(std::span<const GraphSnapshot* const> train,
                  std::span<const GraphSnapshot* const> validation, const ModelConfig& model,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.Validate();
  ModelConfig mc = model;
  mc.mu = config.mu;
  mc.short_window = config.k;
  mc.history_budget = config.history_budget;

  std::vector<const GraphSnapshot*> graphs;
  for (const GraphSnapshot* g : train) {
    if (!g->empty()) graphs.push_back(g);
  }
  if (graphs.empty()) throw DataError("no non-empty training snapshots");

  std::vector<std::vector<double>> degrees;
  for (const GraphSnapshot* g : graphs) degrees.push_back(g->Degrees());

  std::vector<std::pair<size_t, size_t>> chunks;
  const size_t step = config.batch_windows > 0 ? static_cast<size_t>(config.batch_windows)
                                               : graphs.size();
  for (size_t b = 0; b < graphs.size(); b += step) {
    chunks.emplace_back(b, std::min(graphs.size(), b + step));
  }

  TrainResult result;
  result.params = InitParams(mc, config.seed);
  ModelParams& params = result.params;
  Rng rng(config.seed ^ kSamplingSalt);
  AdamW optimizer(config.lr, config.beta1, config.beta2, config.adam_eps, config.lambda);
  Matrix center;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (center.size() == 0 && chunks.size() > 1) {
      const std::vector<Matrix> h = TemporalEncode(params, graphs);
      Matrix reprs(static_cast<Eigen::Index>(h.size()), 2 * mc.hidden_dim);
      for (size_t g = 0; g < h.size(); ++g) reprs.row(static_cast<Eigen::Index>(g)) = GraphRepr(h[g]);
      center = SvddCenter(reprs);
    }
    EpochLog log;
    log.epoch = epoch;
    double reg_norms = 0.0;
    double distance_sum = 0.0;
    for (const auto& [begin, end] : chunks) {
      const std::span<const GraphSnapshot* const> part(graphs.data() + begin, end - begin);
      Tape tape;
      const ParamVars vars = BindParams(tape, params, true);
      const SequenceEncoding enc = EncodeSequence(tape, vars, mc, part);

      std::vector<Eigen::Index> pos_i, pos_j, neg_i, neg_j;
      std::vector<double> weights;
      for (size_t g = 0; g < part.size(); ++g) {
        const GraphSnapshot& snap = *part[g];
        const Eigen::Index off = enc.offsets[g];
        for (const Edge& e : snap.edges) {
          for (int r = 0; r < config.negatives_per_edge; ++r) {
            const std::optional<NegativeEdge> neg =
                SampleNegative(e, snap, degrees[begin + g], rng);
            if (!neg) continue;
            log.flagged += neg->flagged ? 1 : 0;
            pos_i.push_back(off + e.i);
            pos_j.push_back(off + e.j);
            neg_i.push_back(off + neg->i);
            neg_j.push_back(off + neg->j);
            weights.push_back(static_cast<double>(e.w));
          }
        }
      }

      Var total;
      if (!weights.empty()) {
        const Var f_pos = EdgeScores(enc.h, vars, mc.mu, pos_i, pos_j, weights);
        const Var f_neg = EdgeScores(enc.h, vars, mc.mu, neg_i, neg_j, weights);
        const PairLossSummary pairs =
            PairLosses(Column(f_pos.value()), Column(f_neg.value()), config.gamma);
        std::vector<Eigen::Index> kept;
        for (size_t k = 0; k < pairs.retained.size(); ++k) {
          if (pairs.retained[k]) kept.push_back(static_cast<Eigen::Index>(k));
        }
        log.pairs += static_cast<int64_t>(weights.size());
        log.retained += static_cast<int64_t>(kept.size());
        log.loss_edge += pairs.total;
        if (!kept.empty()) {
          const Var gap = nn::Sub(nn::GatherRows(f_pos, kept), nn::GatherRows(f_neg, kept));
          total = nn::Sum(nn::Relu(nn::AddScalar(gap, config.gamma)));
        }
      }

      const Var reprs = nn::SegmentMaxPool(enc.h, enc.offsets);
      if (center.size() == 0) center = SvddCenter(reprs.value());
      const Var dist = nn::RowSquaredDistance(reprs, center);
      const std::vector<double> d = Column(dist.value());
      const double r2 = SvddRadiusSq(d, config.percentile);
      const double lg = SvddLoss(d, r2, config.svdd_c_weight);
      log.loss_graph += lg / static_cast<double>(chunks.size());
      log.radius_sq += r2 / static_cast<double>(chunks.size());
      for (double v : d) distance_sum += v;
      if (config.alpha > 0.0) {
        const Var slack = nn::Mean(nn::Relu(nn::AddScalar(dist, -r2)));
        const Var graph_term = nn::Scale(slack, config.alpha * config.svdd_c_weight);
        total = total.valid() ? nn::Add(total, graph_term) : graph_term;
      }

      const std::vector<bool> regularized = params.Regularized();
      const std::vector<Matrix*> trainable = params.Trainable();
      for (size_t k = 0; k < trainable.size(); ++k) {
        if (regularized[k]) reg_norms += trainable[k]->squaredNorm();
      }
      std::vector<Matrix> grads;
      if (total.valid()) {
        CheckFinite(total.scalar(), "loss", epoch);
        tape.Backward(total);
        for (const Var& v : vars.all) {
          grads.push_back(v.grad());
          if (!nn::AllFinite(grads.back())) {
            throw NumericError(fmt::format("training diverged: non-finite gradient at epoch {}", epoch));
          }
        }
      } else {
        for (const Matrix* p : trainable) grads.push_back(Matrix::Zero(p->rows(), p->cols()));
      }
      optimizer.Step(trainable, grads, regularized);
    }
    log.mean_sq_distance = distance_sum / static_cast<double>(graphs.size());
    log.loss = log.loss_edge + config.alpha * log.loss_graph +
               0.5 * config.lambda * reg_norms / static_cast<double>(chunks.size());
    CheckFinite(log.loss, "loss", epoch);
    if (!validation.empty()) {
      const std::vector<ScoredEdge> scored = ScoreEdges(params, validation);
      log.val_f1 = BestF1(EdgeItems(scored));
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }

  // Final radius from the trained weights.
  params.center = center;
  const std::vector<Matrix> h = TemporalEncode(params, graphs);
  std::vector<double> d;
  for (const Matrix& hg : h) d.push_back(nn::L2NormSq(GraphRepr(hg) - center));
  params.radius_sq = SvddRadiusSq(d, config.percentile);
  return result;
}

}  // namespace glad
