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

#include <cmath>
#include <limits>
#include <vector>

#include "glad/autodiff.h"
#include "glad/common.h"
#include "glad/graph_build.h"
#include "glad/model.h"
#include "gtest/gtest.h"

namespace glad {
namespace {

using nn::Matrix;

Matrix Random(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Uniform(-1, 1);
  return m;
}

GraphSnapshot Star(int64_t t, int leaves, Rng& rng, int dim = 4) {
  GraphSnapshot g;
  g.t = t;
  g.nodes.push_back({NodeKind::kEvent, std::nullopt, "hub"});
  for (int k = 0; k < leaves; ++k) {
    g.nodes.push_back({NodeKind::kField, FieldType::kServer, "leaf" + std::to_string(k)});
  }
  for (int k = 0; k < leaves; ++k) g.edges.push_back({0, k + 1, 1 + (k + t) % 3});
  g.x = Random(leaves + 1, dim, rng);
  g.edge_labels.assign(g.edges.size(), Label::kNormal);
  g.contributors.assign(g.edges.size(), {});
  return g;
}

// Hub 0 with degree 3 to leaves 1..3, plus isolated-ish spare nodes.
GraphSnapshot DegreeThreeVsOne() {
  GraphSnapshot g;
  for (int k = 0; k < 8; ++k) g.nodes.push_back({NodeKind::kField, FieldType::kIp, std::to_string(k)});
  g.edges = {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}, {4, 5, 1}};
  g.x = Matrix::Zero(8, 4);
  return g;
}

TEST(SampleNegative, BernoulliSideFrequency) {
  const GraphSnapshot g = DegreeThreeVsOne();
  const std::vector<double> d = g.Degrees();
  ASSERT_EQ(d[0], 3.0);
  ASSERT_EQ(d[1], 1.0);
  Rng rng(2024);
  int replaced_i = 0;
  int flagged = 0;
  for (int n = 0; n < 10000; ++n) {
    const auto neg = SampleNegative(g.edges[0], g, d, rng);
    ASSERT_TRUE(neg.has_value());
    replaced_i += neg->replaced_i;
    flagged += neg->flagged;
    EXPECT_FALSE(std::min(neg->i, neg->j) == 0 && std::max(neg->i, neg->j) == 1);
    EXPECT_NE(neg->i, neg->j);
    EXPECT_EQ(neg->w, 1);
  }
  EXPECT_NEAR(replaced_i / 10000.0, 0.75, 0.02);
  EXPECT_LT(flagged, 10);
}

TEST(SampleNegative, EqualDegreesFairCoin) {
  const GraphSnapshot g = DegreeThreeVsOne();
  const std::vector<double> d = g.Degrees();
  Rng rng(7);
  int replaced_i = 0;
  for (int n = 0; n < 10000; ++n) replaced_i += SampleNegative(g.edges[3], g, d, rng)->replaced_i;
  EXPECT_NEAR(replaced_i / 10000.0, 0.5, 0.02);
}

TEST(SampleNegative, NeverDuplicatesExistingEdges) {
  Rng rng(8);
  const GraphSnapshot g = Star(0, 5, rng);
  const std::vector<double> d = g.Degrees();
  for (int n = 0; n < 2000; ++n) {
    const Edge& e = g.edges[n % g.edges.size()];
    const auto neg = SampleNegative(e, g, d, rng);
    ASSERT_TRUE(neg.has_value());
    if (!neg->flagged) {
      EXPECT_FALSE(g.HasEdge(neg->i, neg->j));
      EXPECT_NE(neg->i, neg->j);
    }
  }
}

TEST(SampleNegative, ExhaustedRetriesAreFlagged) {
  // Complete bipartite-like triangle: every other pair is already an edge.
  GraphSnapshot g;
  for (int k = 0; k < 3; ++k) g.nodes.push_back({NodeKind::kField, FieldType::kIp, std::to_string(k)});
  g.edges = {{0, 1, 1}, {0, 2, 1}, {1, 2, 1}};
  g.x = Matrix::Zero(3, 2);
  Rng rng(9);
  const auto neg = SampleNegative(g.edges[0], g, g.Degrees(), rng);
  ASSERT_TRUE(neg.has_value());
  EXPECT_TRUE(neg->flagged);
}

TEST(SampleNegative, TinySnapshotSkipped) {
  GraphSnapshot g;
  for (int k = 0; k < 2; ++k) g.nodes.push_back({NodeKind::kField, FieldType::kIp, std::to_string(k)});
  g.edges = {{0, 1, 1}};
  Rng rng(1);
  EXPECT_FALSE(SampleNegative(g.edges[0], g, g.Degrees(), rng).has_value());
}

TEST(PairLoss, Table) {
  EXPECT_EQ(PairLoss(0.2, 0.9, 0.5), 0.0);
  EXPECT_EQ(*PairLoss(0.3, 0.4, 0.5), 0.4);
  EXPECT_FALSE(PairLoss(0.6, 0.3, 0.5).has_value());
}

TEST(PairLosses, SumsRetainedOnly) {
  const std::vector<double> pos = {0.2, 0.3, 0.6};
  const std::vector<double> neg = {0.9, 0.4, 0.3};
  const PairLossSummary s = PairLosses(pos, neg, 0.5);
  EXPECT_EQ(s.retained, (std::vector<bool>{true, true, false}));
  EXPECT_NEAR(s.total, 0.4, 1e-15);
}

TEST(PairLosses, SeparatedScoresGiveZero) {
  const std::vector<double> pos = {0.0, 0.1, 0.2};
  const std::vector<double> neg = {0.6, 0.7, 0.9};
  EXPECT_EQ(PairLosses(pos, neg, 0.5).total, 0.0);
}

TEST(PairLosses, BoundedByMarginPlusWeight) {
  Rng rng(10);
  for (int n = 0; n < 1000; ++n) {
    const double w = 1 + static_cast<double>(rng.Below(5));
    const double fp = w * rng.Uniform();
    const double fn = w * rng.Uniform();
    const auto l = PairLoss(fp, fn, 0.5);
    if (l) {
      EXPECT_GE(*l, 0.0);
      EXPECT_LE(*l, 0.5 + w);
    }
  }
}

TEST(GraphRepr, ColumnMax) {
  Matrix one(1, 2);
  one << 5, -1;
  EXPECT_EQ(GraphRepr(one), one);
  Matrix m(2, 2);
  m << 1, 4, 3, 2;
  Matrix want(1, 2);
  want << 3, 4;
  EXPECT_EQ(GraphRepr(m), want);
  Matrix grown(3, 2);
  grown << 1, 4, 3, 2, 0, 1;
  EXPECT_EQ(GraphRepr(grown), want);
}

TEST(Svdd, RadiusPercentile) {
  const std::vector<double> same = {2.0, 2.0, 2.0};
  EXPECT_EQ(SvddRadiusSq(std::vector<double>{0, 0, 0}, 0.5), 0.0);
  EXPECT_EQ(SvddRadiusSq(same, 0.95), 2.0);
  // Distances 1..4 squared; rank ceil(0.95 * 4) = 4.
  const std::vector<double> sq = {1, 4, 9, 16};
  EXPECT_EQ(SvddRadiusSq(sq, 0.95), 16.0);
  EXPECT_EQ(SvddRadiusSq(sq, 1.0), 16.0);
  EXPECT_EQ(SvddRadiusSq(sq, 0.5), 4.0);
}

TEST(Svdd, CenterIsMean) {
  Matrix r(2, 2);
  r << 1, 2, 3, 6;
  Matrix want(1, 2);
  want << 2, 4;
  EXPECT_EQ(SvddCenter(r), want);
}

TEST(Svdd, LossExamples) {
  const std::vector<double> inside = {0.5, 1.0};
  EXPECT_EQ(SvddLoss(inside, 1.0, 1.0), 1.0);
  const std::vector<double> out = {3.0};
  EXPECT_EQ(SvddLoss(out, 1.0, 1.0), 3.0);
  const std::vector<double> mixed = {0.5, 4.0};
  const double base = SvddLoss(mixed, 1.0, 1.0) - 1.0;
  EXPECT_DOUBLE_EQ(SvddLoss(mixed, 1.0, 2.0) - 1.0, 2 * base);
}

TEST(TotalLoss, Examples) {
  const Matrix zero = Matrix::Zero(2, 2);
  std::vector<const Matrix*> none = {&zero};
  EXPECT_EQ(TotalLoss(1.5, 7.0, none, 0.0, 0.0), 1.5);
  EXPECT_EQ(TotalLoss(0.0, 0.0, none, 1.0, 1.0), 0.0);
  Matrix w1(1, 2);
  w1 << 3, 4;
  std::vector<const Matrix*> one = {&zero, &w1};
  EXPECT_EQ(TotalLoss(0.0, 0.0, one, 1.0, 2.0), 25.0);
}

TEST(TotalLoss, SkipsBiases) {
  ModelConfig c;
  c.input_dim = 2;
  c.hidden_dim = 2;
  c.attn_head_dim = 1;
  c.ffn_dim = 2;
  ModelParams p = InitParams(c, 1);
  for (Matrix* m : p.Trainable()) m->setZero();
  p.attn_long[0].ff1_bias.setConstant(10.0);
  EXPECT_EQ(TotalLoss(0.0, 0.0, p, 1.0, 2.0), 0.0);
  p.w1(0, 0) = 3.0;
  EXPECT_EQ(TotalLoss(0.0, 0.0, p, 1.0, 2.0), 9.0);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  Matrix a = Matrix::Constant(1, 2, 1.0);
  Matrix b = Matrix::Constant(1, 1, 1.0);
  std::vector<Matrix*> params = {&a, &b};
  const std::vector<Matrix> grads = {(Matrix(1, 2) << 0.5, -2.0).finished(), Matrix::Zero(1, 1)};
  AdamW opt(0.1, 0.9, 0.999, 1e-12, 0.0);
  opt.Step(params, grads, {true, true});
  EXPECT_NEAR(a(0, 0), 0.9, 1e-9);
  EXPECT_NEAR(a(0, 1), 1.1, 1e-9);
  EXPECT_EQ(b(0, 0), 1.0);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(AdamW, DecayOnlyWhereFlagged) {
  Matrix a = Matrix::Constant(1, 1, 2.0);
  Matrix b = Matrix::Constant(1, 1, 2.0);
  std::vector<Matrix*> params = {&a, &b};
  const std::vector<Matrix> grads = {Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
  AdamW opt(0.1, 0.9, 0.999, 1e-8, 0.5);
  opt.Step(params, grads, {true, false});
  EXPECT_NEAR(a(0, 0), 2.0 - 0.1 * 0.5 * 2.0, 1e-12);
  EXPECT_EQ(b(0, 0), 2.0);
}

ModelConfig SmallModel() {
  ModelConfig c;
  c.input_dim = 4;
  c.hidden_dim = 6;
  c.attn_head_dim = 3;
  c.ffn_dim = 5;
  c.short_window = 2;
  return c;
}

TrainConfig SmallTrain(int epochs) {
  TrainConfig t;
  t.seed = 3;
  t.epochs = epochs;
  t.lr = 1e-2;
  t.k = 2;
  t.history_budget = 4;
  return t;
}

std::vector<GraphSnapshot> Stars(int n) {
  Rng rng(11);
  std::vector<GraphSnapshot> gs;
  for (int t = 0; t < n; ++t) gs.push_back(Star(t, 4, rng));
  return gs;
}

std::vector<const GraphSnapshot*> Ptrs(const std::vector<GraphSnapshot>& gs) {
  std::vector<const GraphSnapshot*> out;
  for (const GraphSnapshot& g : gs) out.push_back(&g);
  return out;
}

TEST(Train, SameSeedSameTrajectory) {
  const std::vector<GraphSnapshot> gs = Stars(6);
  const TrainResult a = Train(Ptrs(gs), {}, SmallModel(), SmallTrain(5));
  const TrainResult b = Train(Ptrs(gs), {}, SmallModel(), SmallTrain(5));
  ASSERT_EQ(a.log.size(), 5u);
  for (size_t e = 0; e < a.log.size(); ++e) {
    EXPECT_EQ(a.log[e].ToJson(), b.log[e].ToJson());
    EXPECT_NEAR(a.log[e].loss, b.log[e].loss, 1e-12);
  }
  EXPECT_EQ(a.params.w1, b.params.w1);
}

TEST(Train, CenterFrozenAfterFirstEpoch) {
  const std::vector<GraphSnapshot> gs = Stars(6);
  const TrainResult one = Train(Ptrs(gs), {}, SmallModel(), SmallTrain(1));
  const TrainResult four = Train(Ptrs(gs), {}, SmallModel(), SmallTrain(4));
  EXPECT_EQ(one.params.center, four.params.center);
  EXPECT_NE(one.params.w1, four.params.w1);
  EXPECT_GE(four.params.radius_sq, 0.0);
}

TEST(Train, ChunkedCenterMatchesFullBatch) {
  const std::vector<GraphSnapshot> gs = Stars(6);
  TrainConfig chunked = SmallTrain(1);
  chunked.batch_windows = 2;
  const TrainResult a = Train(Ptrs(gs), {}, SmallModel(), SmallTrain(1));
  const TrainResult b = Train(Ptrs(gs), {}, SmallModel(), chunked);
  EXPECT_TRUE(a.params.center.isApprox(b.params.center, 1e-12));
}

TEST(Train, LogsEveryEpochAndValidation) {
  const std::vector<GraphSnapshot> gs = Stars(8);
  std::vector<GraphSnapshot> val = Stars(2);
  val[1].edge_labels[0] = Label::kAnomalous;
  int calls = 0;
  const TrainResult r = Train(Ptrs(gs), Ptrs(val), SmallModel(), SmallTrain(3),
                              [&](const EpochLog&) { ++calls; });
  EXPECT_EQ(calls, 3);
  for (const EpochLog& l : r.log) {
    EXPECT_TRUE(l.val_f1.has_value());
    EXPECT_GE(l.loss_edge, 0.0);
    EXPECT_LE(l.retained, l.pairs);
    EXPECT_NEAR(l.loss, l.loss_edge + l.loss_graph, 1e-3 * std::max(1.0, l.loss));
  }
}

TEST(Train, HingeStepSeparatesPair) {
  Rng rng(12);
  const ModelConfig c = SmallModel();
  const ModelParams p = InitParams(c, 13);
  const std::vector<GraphSnapshot> gs = {Star(0, 2, rng), Star(1, 2, rng)};
  const std::vector<const GraphSnapshot*> ptrs = Ptrs(gs);
  const std::vector<Eigen::Index> pi = {0}, pj = {1}, ni = {1}, nj = {2};
  const std::vector<double> w = {1.0};
  auto gap = [&](const ModelParams& m) {
    nn::Tape tape;
    const ParamVars v = BindParams(tape, m, false);
    const SequenceEncoding enc = EncodeSequence(tape, v, c, ptrs);
    return EdgeScores(enc.h, v, c.mu, pi, pj, w).scalar() -
           EdgeScores(enc.h, v, c.mu, ni, nj, w).scalar();
  };
  std::vector<Matrix> params;
  for (const Matrix* m : p.Trainable()) params.push_back(*m);
  const nn::GradResult g = nn::Gradients(
      [&](nn::Tape& tape, std::span<const nn::Var> vars) {
        ParamVars v = BindParams(tape, p, false);
        size_t k = 0;
        v.gcn.assign(vars.begin(), vars.begin() + 2);
        k = 2;
        for (auto* stack : {&v.attn_long, &v.attn_short}) {
          for (AttentionVars& a : *stack) {
            a = {vars[k], vars[k + 1], vars[k + 2], vars[k + 3],
                 vars[k + 4], vars[k + 5], vars[k + 6], vars[k + 7]};
            k += 8;
          }
        }
        v.w1 = vars[k];
        v.w2 = vars[k + 1];
        const SequenceEncoding enc = EncodeSequence(tape, v, c, ptrs);
        const nn::Var d = nn::Sub(EdgeScores(enc.h, v, c.mu, pi, pj, w),
                                  EdgeScores(enc.h, v, c.mu, ni, nj, w));
        return nn::Relu(nn::AddScalar(d, 0.5));
      },
      params);
  ASSERT_GT(g.loss, 0.0);
  ModelParams stepped = p;
  auto targets = stepped.Trainable();
  for (size_t i = 0; i < targets.size(); ++i) *targets[i] -= 1e-4 * g.grads[i];
  EXPECT_LT(gap(stepped), gap(p));
}

TEST(Train, DivergenceIsNumericError) {
  const std::vector<GraphSnapshot> gs = Stars(4);
  TrainConfig t = SmallTrain(20);
  t.lr = 1e306;
  EXPECT_THROW(Train(Ptrs(gs), {}, SmallModel(), t), NumericError);
}

TEST(TrainConfig, JsonContract) {
  TrainConfig t;
  t.seed = 9;
  EXPECT_EQ(TrainConfig::FromJson(t.ToJson()).ToJson(), t.ToJson());
  EXPECT_THROW(TrainConfig::FromJson({{"lr", 0.1}}), UsageError);
  EXPECT_THROW(TrainConfig::FromJson({{"seed", 1}, {"learning_rate", 0.1}}), UsageError);
  EXPECT_THROW(TrainConfig::FromJson({{"seed", 1}, {"gamma", 1.5}}), UsageError);
  EXPECT_THROW(TrainConfig::FromJson({{"seed", 1}, {"percentile", 0.0}}), UsageError);
  EXPECT_THROW(TrainConfig::FromJson({{"seed", 1}, {"lambda", -1.0}}), UsageError);
  const TrainConfig d = TrainConfig::FromJson({{"seed", 1}});
  EXPECT_EQ(d.lr, 1e-3);
  EXPECT_EQ(d.epochs, 100);
  EXPECT_EQ(d.gamma, 0.5);
  EXPECT_EQ(d.mu, 0.3);
  EXPECT_EQ(d.alpha, 1.0);
  EXPECT_EQ(d.lambda, 5e-7);
  EXPECT_EQ(d.k, 5);
}

}  // namespace
}  // namespace glad
