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

#include "glad/model.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>

#include "glad/common.h"

namespace glad {

using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {

constexpr char kModelMagic[8] = {'G', 'L', 'A', 'D', 'M', 'D', 'L', '1'};
constexpr uint32_t kModelVersion = 1;

Matrix GlorotUniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Uniform(-limit, limit);
  return m;
}

AttentionLayer InitAttention(const ModelConfig& c, Rng& rng) {
  AttentionLayer layer;
  layer.wq = GlorotUniform(c.hidden_dim, c.attn_head_dim, rng);
  layer.wk = GlorotUniform(c.hidden_dim, c.attn_head_dim, rng);
  layer.wv = GlorotUniform(c.hidden_dim, c.attn_head_dim, rng);
  layer.wo = GlorotUniform(c.attn_head_dim, c.hidden_dim, rng);
  layer.ff1 = GlorotUniform(c.hidden_dim, c.ffn_dim, rng);
  layer.ff1_bias = Matrix::Zero(1, c.ffn_dim);
  layer.ff2 = GlorotUniform(c.ffn_dim, c.hidden_dim, rng);
  layer.ff2_bias = Matrix::Zero(1, c.hidden_dim);
  return layer;
}

AttentionVars BindAttention(Tape& tape, const AttentionLayer& l, bool trainable) {
  auto bind = [&](const Matrix& m) { return trainable ? tape.Parameter(m) : tape.Constant(m); };
  return AttentionVars{bind(l.wq),  bind(l.wk),       bind(l.wv),  bind(l.wo),
                       bind(l.ff1), bind(l.ff1_bias), bind(l.ff2), bind(l.ff2_bias)};
}

void AppendAttention(std::vector<Var>& all, const AttentionVars& v) {
  for (const Var& x : {v.wq, v.wk, v.wv, v.wo, v.ff1, v.ff1_bias, v.ff2, v.ff2_bias}) {
    all.push_back(x);
  }
}

template <typename Self, typename Out>
void CollectTrainable(Self& p, Out& out) {
  for (auto& w : p.gcn) out.push_back(&w);
  for (auto* stack : {&p.attn_long, &p.attn_short}) {
    for (auto& l : *stack) {
      for (auto* m : {&l.wq, &l.wk, &l.wv, &l.wo, &l.ff1, &l.ff1_bias, &l.ff2, &l.ff2_bias}) {
        out.push_back(m);
      }
    }
  }
  out.push_back(&p.w1);
  out.push_back(&p.w2);
}

std::vector<std::string> TrainableNames(const ModelParams& p) {
  std::vector<std::string> names;
  for (size_t l = 0; l < p.gcn.size(); ++l) names.push_back("gcn." + std::to_string(l));
  const char* parts[] = {"wq", "wk", "wv", "wo", "ff1", "ff1_bias", "ff2", "ff2_bias"};
  for (const char* stack : {"attn_long", "attn_short"}) {
    const auto& layers = std::string(stack) == "attn_long" ? p.attn_long : p.attn_short;
    for (size_t l = 0; l < layers.size(); ++l) {
      for (const char* part : parts) {
        names.push_back(std::string(stack) + "." + std::to_string(l) + "." + part);
      }
    }
  }
  names.push_back("w1");
  names.push_back("w2");
  return names;
}

// Rows at position p see keys with positions in (p - budget, p]; positions
// must be non-decreasing so that this is a contiguous key range.
std::shared_ptr<nn::AttentionLayout> BandLayout(std::span<const int64_t> positions,
                                                std::span<const Eigen::Index> query_rows,
                                                int64_t budget) {
  if (!std::is_sorted(positions.begin(), positions.end())) {
    throw UsageError("attention: row positions must be non-decreasing");
  }
  auto layout = std::make_shared<nn::AttentionLayout>();
  const auto n = static_cast<Eigen::Index>(query_rows.empty() ? positions.size() : query_rows.size());
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::Index r = query_rows.empty() ? a : query_rows[static_cast<size_t>(a)];
    const int64_t p = positions[static_cast<size_t>(r)];
    const auto lo = std::upper_bound(positions.begin(), positions.end(), p - budget) - positions.begin();
    const auto hi = std::upper_bound(positions.begin(), positions.end(), p) - positions.begin();
    if (!layout->empty() && layout->back().k_begin == lo && layout->back().k_end == hi) {
      layout->back().q_end = a + 1;
    } else {
      layout->push_back({a, a + 1, lo, hi});
    }
  }
  return layout;
}

// One attention block: the queried rows of `x` attend per `layout`, then a
// residual feed-forward. `query_rows` null means every row.
Var AttentionBlock(const AttentionVars& p, const Var& x, const std::vector<Eigen::Index>* query_rows,
                   std::shared_ptr<const nn::AttentionLayout> layout) {
  const Var xq = query_rows ? nn::GatherRows(x, *query_rows) : x;
  const Var q = nn::MatMul(xq, p.wq);
  const Var k = nn::MatMul(x, p.wk);
  const Var v = nn::MatMul(x, p.wv);
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  const Var mixed = nn::MatMul(nn::GroupedAttention(q, k, v, std::move(layout), scale), p.wo);
  const Var h1 = nn::Add(xq, mixed);
  const Var inner = nn::Relu(nn::AddRowBroadcast(nn::MatMul(h1, p.ff1), p.ff1_bias));
  return nn::Add(h1, nn::AddRowBroadcast(nn::MatMul(inner, p.ff2), p.ff2_bias));
}

// AttentionBlock over GatherRows(source, rows), projecting `source` once
// before gathering. Query indices refer to the gathered rows.
Var GatheredAttentionBlock(const AttentionVars& p, const Var& source,
                           const std::vector<Eigen::Index>& rows,
                           const std::vector<Eigen::Index>* query_rows,
                           std::shared_ptr<const nn::AttentionLayout> layout) {
  std::vector<Eigen::Index> q_rows;
  if (query_rows) {
    q_rows.reserve(query_rows->size());
    for (Eigen::Index r : *query_rows) q_rows.push_back(rows[static_cast<size_t>(r)]);
  } else {
    q_rows = rows;
  }
  const Var xq = nn::GatherRows(source, q_rows);
  const Var q = nn::GatherRows(nn::MatMul(source, p.wq), q_rows);
  const Var k = nn::GatherRows(nn::MatMul(source, p.wk), rows);
  const Var v = nn::GatherRows(nn::MatMul(source, p.wv), rows);
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  const Var mixed = nn::MatMul(nn::GroupedAttention(q, k, v, std::move(layout), scale), p.wo);
  const Var h1 = nn::Add(xq, mixed);
  const Var inner = nn::Relu(nn::AddRowBroadcast(nn::MatMul(h1, p.ff1), p.ff1_bias));
  return nn::Add(h1, nn::AddRowBroadcast(nn::MatMul(inner, p.ff2), p.ff2_bias));
}

std::shared_ptr<nn::SparseMatrix> BlockPropagation(
    std::span<const GraphSnapshot* const> graphs, std::span<const Eigen::Index> offsets) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (size_t g = 0; g < graphs.size(); ++g) {
    const nn::SparseMatrix p = NormalizedAdjacency(*graphs[g]);
    for (Eigen::Index r = 0; r < p.outerSize(); ++r) {
      for (nn::SparseMatrix::InnerIterator it(p, r); it; ++it) {
        triplets.emplace_back(offsets[g] + it.row(), offsets[g] + it.col(), it.value());
      }
    }
  }
  auto out = std::make_shared<nn::SparseMatrix>(offsets.back(), offsets.back());
  out->setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

}  // namespace

nlohmann::json ModelConfig::ToJson() const {
  return {{"input_dim", input_dim},         {"hidden_dim", hidden_dim},
          {"gcn_layers", gcn_layers},       {"attn_layers", attn_layers},
          {"attn_head_dim", attn_head_dim}, {"ffn_dim", ffn_dim},
          {"short_window", short_window},   {"history_budget", history_budget},
          {"temporal", temporal},           {"position_scale", position_scale},
          {"mu", mu}};
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  ModelConfig c;
  c.input_dim = j.value("input_dim", c.input_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.gcn_layers = j.value("gcn_layers", c.gcn_layers);
  c.attn_layers = j.value("attn_layers", c.attn_layers);
  c.attn_head_dim = j.value("attn_head_dim", c.attn_head_dim);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.short_window = j.value("short_window", c.short_window);
  c.history_budget = j.value("history_budget", c.history_budget);
  c.temporal = j.value("temporal", c.temporal);
  c.position_scale = j.value("position_scale", c.position_scale);
  c.mu = j.value("mu", c.mu);
  if (c.input_dim < 1 || c.hidden_dim < 1 || c.gcn_layers < 1 || c.attn_layers < 1 ||
      c.attn_head_dim < 1 || c.ffn_dim < 1 || c.short_window < 1 || c.history_budget < 1) {
    throw UsageError("model dimensions, layer counts, k and history budget must be positive");
  }
  if (!(c.position_scale >= 0.0) || !std::isfinite(c.position_scale)) {
    throw UsageError("position_scale must be finite and non-negative");
  }
  return c;
}

std::vector<Matrix*> ModelParams::Trainable() {
  std::vector<Matrix*> out;
  CollectTrainable(*this, out);
  return out;
}

std::vector<const Matrix*> ModelParams::Trainable() const {
  std::vector<const Matrix*> out;
  CollectTrainable(*this, out);
  return out;
}

std::vector<bool> ModelParams::Regularized() const {
  std::vector<bool> out(gcn.size(), true);
  for (size_t i = 0; i < attn_long.size() + attn_short.size(); ++i) {
    out.insert(out.end(), {true, true, true, true, true, false, true, false});
  }
  out.push_back(true);
  out.push_back(true);
  return out;
}

ModelParams InitParams(const ModelConfig& config, uint64_t seed) {
  Rng rng(seed);
  ModelParams p;
  p.config = config;
  for (int l = 0; l < config.gcn_layers; ++l) {
    p.gcn.push_back(GlorotUniform(l == 0 ? config.input_dim : config.hidden_dim,
                                  config.hidden_dim, rng));
  }
  for (int l = 0; l < config.attn_layers; ++l) p.attn_long.push_back(InitAttention(config, rng));
  for (int l = 0; l < config.attn_layers; ++l) p.attn_short.push_back(InitAttention(config, rng));
  p.w1 = GlorotUniform(1, 2 * config.hidden_dim, rng);
  p.w2 = GlorotUniform(1, 2 * config.hidden_dim, rng);
  return p;
}

void SaveModel(const std::string& path, const ModelParams& params,
               const nlohmann::json& fingerprint) {
  std::vector<const Matrix*> mats = params.Trainable();
  std::vector<std::string> names = TrainableNames(params);
  if (params.center.size() > 0) {
    mats.push_back(&params.center);
    names.push_back("center");
  }
  nlohmann::json header = {{"config", params.config.ToJson()},
                           {"fingerprint", fingerprint},
                           {"radius_sq", params.radius_sq},
                           {"matrices", nlohmann::json::array()}};
  for (size_t i = 0; i < mats.size(); ++i) {
    header["matrices"].push_back({{"name", names[i]}, {"rows", mats[i]->rows()},
                                  {"cols", mats[i]->cols()}});
  }
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path);
  const uint32_t version = kModelVersion;
  const uint64_t length = text.size();
  out.write(kModelMagic, sizeof(kModelMagic));
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&length), sizeof(length));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Matrix* m : mats) {
    out.write(reinterpret_cast<const char*>(m->data()),
              static_cast<std::streamsize>(sizeof(double) * m->size()));
  }
  if (!out) throw DataError("error while writing model file " + path);
}

ModelParams LoadModel(const std::string& path, nlohmann::json* fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file " + path);
  char magic[8];
  uint32_t version = 0;
  uint64_t length = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw DataError("not a model file: " + path);
  }
  if (version != kModelVersion) {
    throw DataError("unsupported model file version " + std::to_string(version));
  }
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  nlohmann::json header = nlohmann::json::parse(text, nullptr, false);
  if (!in || header.is_discarded()) throw DataError("corrupt model header in " + path);

  ModelParams p = InitParams(ModelConfig::FromJson(header.at("config")), 0);
  p.radius_sq = header.value("radius_sq", 0.0);
  std::vector<Matrix*> mats = p.Trainable();
  const auto& listed = header.at("matrices");
  if (listed.size() == mats.size() + 1) {
    p.center = Matrix::Zero(1, 2 * p.config.hidden_dim);
    mats.push_back(&p.center);
  } else if (listed.size() != mats.size()) {
    throw DataError("model file lists an unexpected number of matrices");
  }
  for (size_t i = 0; i < mats.size(); ++i) {
    if (listed[i].at("rows").get<Eigen::Index>() != mats[i]->rows() ||
        listed[i].at("cols").get<Eigen::Index>() != mats[i]->cols()) {
      throw DataError("shape mismatch for " + listed[i].at("name").get<std::string>());
    }
    in.read(reinterpret_cast<char*>(mats[i]->data()),
            static_cast<std::streamsize>(sizeof(double) * mats[i]->size()));
  }
  if (!in) throw DataError("truncated model file " + path);
  if (fingerprint != nullptr) *fingerprint = header.value("fingerprint", nlohmann::json());
  return p;
}

Matrix NormalizePropagation(const Matrix& a_hat, const Matrix& d_hat) {
  if (a_hat.rows() != a_hat.cols() || d_hat.rows() != a_hat.rows() ||
      d_hat.cols() != a_hat.cols()) {
    throw UsageError("propagation: adjacency and degree shapes differ");
  }
  Eigen::VectorXd inv_sqrt(a_hat.rows());
  for (Eigen::Index i = 0; i < a_hat.rows(); ++i) {
    if (!(d_hat(i, i) > 0)) throw UsageError("propagation: degree must be positive");
    inv_sqrt(i) = 1.0 / std::sqrt(d_hat(i, i));
  }
  return inv_sqrt.asDiagonal() * a_hat * inv_sqrt.asDiagonal();
}

Matrix GcnLayer(const Matrix& h, const Matrix& a_hat, const Matrix& d_hat, const Matrix& w) {
  return nn::Relu(nn::MatMul(NormalizePropagation(a_hat, d_hat), nn::MatMul(h, w)));
}

Matrix EncodeSnapshot(const GraphSnapshot& snapshot, const ModelParams& params) {
  if (snapshot.empty()) return Matrix(0, params.config.hidden_dim);
  const SelfLoopForm loops = WithSelfLoops(snapshot.Adjacency());
  Matrix h = snapshot.x;
  for (const Matrix& w : params.gcn) h = GcnLayer(h, loops.a_hat, loops.d_hat, w);
  return h;
}

std::vector<double> PositionEmbedding(int64_t p, int d) {
  if (p < 0) throw UsageError("position must be >= 0");
  std::vector<double> v(static_cast<size_t>(d));
  for (int c = 0; c < d; c += 2) {
    const double angle =
        static_cast<double>(p) / std::pow(10000.0, static_cast<double>(c) / static_cast<double>(d));
    v[static_cast<size_t>(c)] = std::sin(angle);
    if (c + 1 < d) v[static_cast<size_t>(c) + 1] = std::cos(angle);
  }
  return v;
}

double EdgeScore(const Matrix& h, const Edge& edge, const Matrix& w1, const Matrix& w2,
                 double mu) {
  if (edge.i < 0 || edge.j < 0 || edge.i >= h.rows() || edge.j >= h.rows()) {
    throw UsageError("edge_score: node index out of range");
  }
  if (w1.cols() != h.cols() || w2.cols() != h.cols()) {
    throw UsageError("edge_score: head width does not match node rows");
  }
  const double logit = w1.row(0).dot(h.row(edge.i)) + w2.row(0).dot(h.row(edge.j)) - mu;
  return static_cast<double>(edge.w) * nn::SigmoidScalar(logit);
}

ParamVars BindParams(Tape& tape, const ModelParams& params, bool trainable) {
  auto bind = [&](const Matrix& m) { return trainable ? tape.Parameter(m) : tape.Constant(m); };
  ParamVars v;
  for (const Matrix& w : params.gcn) {
    v.gcn.push_back(bind(w));
    v.all.push_back(v.gcn.back());
  }
  for (const AttentionLayer& l : params.attn_long) {
    v.attn_long.push_back(BindAttention(tape, l, trainable));
    AppendAttention(v.all, v.attn_long.back());
  }
  for (const AttentionLayer& l : params.attn_short) {
    v.attn_short.push_back(BindAttention(tape, l, trainable));
    AppendAttention(v.all, v.attn_short.back());
  }
  v.w1 = bind(params.w1);
  v.w2 = bind(params.w2);
  v.all.push_back(v.w1);
  v.all.push_back(v.w2);
  return v;
}

Var AttentionStack(Tape& tape, std::span<const AttentionVars> layers, const Var& rows,
                   std::span<const int64_t> positions, int64_t budget,
                   std::span<const Eigen::Index> query_rows) {
  if (static_cast<Eigen::Index>(positions.size()) != rows.rows()) {
    throw UsageError("attention: one position per row required");
  }
  if (rows.tape() != &tape) throw UsageError("attention: rows recorded on a different tape");
  const auto full = BandLayout(positions, {}, budget);
  const std::vector<Eigen::Index> queries(query_rows.begin(), query_rows.end());
  Var x = rows;
  for (size_t l = 0; l < layers.size(); ++l) {
    const bool narrow = l + 1 == layers.size() && !queries.empty();
    x = narrow ? AttentionBlock(layers[l], x, &queries, BandLayout(positions, queries, budget))
               : AttentionBlock(layers[l], x, nullptr, full);
  }
  return x;
}

Matrix SetTransformer(const Matrix& rows, std::span<const int64_t> positions,
                      std::span<const AttentionLayer> layers, int64_t budget) {
  Tape tape;
  std::vector<AttentionVars> vars;
  for (const AttentionLayer& l : layers) vars.push_back(BindAttention(tape, l, false));
  Var out = AttentionStack(tape, vars, tape.Constant(rows), positions, budget, {});
  return out.value();
}

SequenceEncoding EncodeSequence(Tape& tape, const ParamVars& vars, const ModelConfig& config,
                                std::span<const GraphSnapshot* const> graphs) {
  SequenceEncoding enc;
  std::vector<const GraphSnapshot*> kept;
  enc.offsets.push_back(0);
  for (const GraphSnapshot* g : graphs) {
    if (g->empty()) continue;
    if (!enc.positions.empty() && g->t <= enc.positions.back()) {
      throw UsageError("snapshots must be in increasing window order");
    }
    if (g->x.cols() != config.input_dim) {
      throw DataError("snapshot attribute width " + std::to_string(g->x.cols()) +
                      " does not match model input " + std::to_string(config.input_dim));
    }
    kept.push_back(g);
    enc.positions.push_back(g->t);
    enc.offsets.push_back(enc.offsets.back() + static_cast<Eigen::Index>(g->node_count()));
  }
  if (kept.empty()) throw DataError("sequence has no non-empty snapshots");
  const Eigen::Index total = enc.offsets.back();

  Matrix x(total, config.input_dim);
  for (size_t g = 0; g < kept.size(); ++g) {
    x.middleRows(enc.offsets[g], kept[g]->x.rows()) = kept[g]->x;
  }
  auto propagation = BlockPropagation(kept, enc.offsets);
  Var h = tape.Constant(std::move(x));
  for (const Var& w : vars.gcn) h = nn::Relu(nn::SpMM(propagation, nn::MatMul(h, w)));
  enc.z = h;

  if (!config.temporal) {
    enc.h = nn::ConcatCols(enc.z, enc.z);
    return enc;
  }

  std::vector<int64_t> row_positions(static_cast<size_t>(total));
  Matrix pos_rows(total, config.hidden_dim);
  for (size_t g = 0; g < kept.size(); ++g) {
    const std::vector<double> e =
        PositionEmbedding(enc.positions[g] - enc.positions.front(), config.hidden_dim);
    const Eigen::Map<const Eigen::RowVectorXd> row(e.data(), config.hidden_dim);
    for (Eigen::Index r = enc.offsets[g]; r < enc.offsets[g + 1]; ++r) {
      pos_rows.row(r) = config.position_scale * row;
      row_positions[static_cast<size_t>(r)] = enc.positions[g];
    }
  }
  Var e = nn::Add(enc.z, tape.Constant(std::move(pos_rows)));

  Var long_term = AttentionStack(tape, vars.attn_long, e, row_positions, config.history_budget, {});

  // Short term: every window [t - k + 1, t] is laid out as its own block of
  // rows and recomputed, so H_t depends on those graphs only.
  std::vector<Eigen::Index> stacked_rows;
  std::vector<Eigen::Index> last_queries;
  auto inner_layout = std::make_shared<nn::AttentionLayout>();
  auto last_layout = std::make_shared<nn::AttentionLayout>();
  size_t lo = 0;
  for (size_t g = 0; g < kept.size(); ++g) {
    while (enc.positions[lo] <= enc.positions[g] - config.short_window) ++lo;
    const auto start = static_cast<Eigen::Index>(stacked_rows.size());
    for (Eigen::Index r = enc.offsets[lo]; r < enc.offsets[g + 1]; ++r) stacked_rows.push_back(r);
    const auto end = static_cast<Eigen::Index>(stacked_rows.size());
    for (size_t h = lo; h <= g; ++h) {
      const Eigen::Index hb = start + enc.offsets[h] - enc.offsets[lo];
      const Eigen::Index he = start + enc.offsets[h + 1] - enc.offsets[lo];
      inner_layout->push_back({hb, he, start, he});
    }
    for (Eigen::Index r = end - (enc.offsets[g + 1] - enc.offsets[g]); r < end; ++r) {
      last_queries.push_back(r);
    }
    last_layout->push_back({enc.offsets[g], enc.offsets[g + 1], start, end});
  }
  const size_t n_short = vars.attn_short.size();
  Var short_term = GatheredAttentionBlock(vars.attn_short[0], e, stacked_rows,
                                          n_short == 1 ? &last_queries : nullptr,
                                          n_short == 1 ? last_layout : inner_layout);
  for (size_t l = 1; l < n_short; ++l) {
    short_term = l + 1 == n_short
                     ? AttentionBlock(vars.attn_short[l], short_term, &last_queries, last_layout)
                     : AttentionBlock(vars.attn_short[l], short_term, nullptr, inner_layout);
  }
  enc.h = nn::ConcatCols(long_term, short_term);
  return enc;
}

Var EdgeScores(const Var& h, const ParamVars& vars, double mu,
               std::span<const Eigen::Index> rows_i, std::span<const Eigen::Index> rows_j,
               std::span<const double> weights) {
  if (rows_i.size() != rows_j.size() || rows_i.size() != weights.size()) {
    throw UsageError("edge scores: endpoint and weight lists differ in length");
  }
  Var s1 = nn::MatMulTransB(h, vars.w1);
  Var s2 = nn::MatMulTransB(h, vars.w2);
  Var a = nn::GatherRows(s1, {rows_i.begin(), rows_i.end()});
  Var b = nn::GatherRows(s2, {rows_j.begin(), rows_j.end()});
  Matrix w = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                               static_cast<Eigen::Index>(weights.size()));
  return nn::ScaleRows(nn::Sigmoid(nn::AddScalar(nn::Add(a, b), -mu)), w);
}

std::vector<Matrix> TemporalEncode(const ModelParams& params,
                                   std::span<const GraphSnapshot* const> graphs) {
  Tape tape;
  ParamVars vars = BindParams(tape, params, false);
  SequenceEncoding enc = EncodeSequence(tape, vars, params.config, graphs);
  std::vector<Matrix> out;
  for (size_t g = 0; g + 1 < enc.offsets.size(); ++g) {
    out.push_back(enc.h.value().middleRows(enc.offsets[g], enc.offsets[g + 1] - enc.offsets[g]));
  }
  return out;
}

}  // namespace glad
