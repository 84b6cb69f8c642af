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

// Scoring, thresholding and metrics for the edge and interval protocols,
// plus the labeled synthetic workload generator.

#ifndef GLAD_EVAL_H_
#define GLAD_EVAL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glad/graph_build.h"
#include "glad/ingest.h"
#include "glad/model.h"
#include "json.hpp"

namespace glad {

struct ScoredItem {
  int64_t id = 0;
  double score = 0.0;
  bool positive = false;
};

struct MetricsReport {
  std::string protocol;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // nullopt when the label set is degenerate (no positives or no negatives).
  std::optional<double> auc;
  std::optional<double> aupr;
  double threshold = 0.0;
  bool threshold_fallback = false;
  int64_t n_pos = 0;
  int64_t n_neg = 0;

  nlohmann::json ToJson() const;
  static MetricsReport FromJson(const nlohmann::json& j);
  std::string ToTable() const;
};

struct SplitRanges {
  size_t train_end = 0;  // [0, train_end)
  size_t val_end = 0;    // [train_end, val_end); test is [val_end, n)
};

// Chronological 6:1:3 split of n windows. Throws DataError for n < 10.
SplitRanges SplitSequences(size_t n);

// Mann-Whitney AUC; tied positive/negative pairs count 1/2.
std::optional<double> Auc(std::span<const ScoredItem> items);
// Average precision over descending scores, ties ordered by ascending id.
std::optional<double> AveragePrecision(std::span<const ScoredItem> items);

// Counts at a threshold. Flagged iff score >= threshold, or score >
// threshold when `strict`.
struct Confusion {
  int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double Precision() const;
  double Recall() const;
  double F1() const;
};
Confusion Classify(std::span<const ScoredItem> items, double threshold, bool strict = false);

struct ThresholdChoice {
  double threshold = 0.0;
  bool fallback = false;
};
// Observed score maximizing F-1 (flag iff score >= threshold); ties go to
// the higher precision, then the higher threshold. Without positives the
// (1 - prior) nearest-rank percentile of the scores is returned instead.
ThresholdChoice ChooseThreshold(std::span<const ScoredItem> items, double anomaly_prior);

MetricsReport ComputeMetrics(std::string protocol, std::span<const ScoredItem> items,
                             double threshold, bool strict = false);

// Value at rank ceil(p * n) of the ascending sample.
double NearestRankPercentile(std::vector<double> values, double p);

struct ScoredEdge {
  int64_t t = 0;
  size_t edge = 0;
  double score = 0.0;
  Label label = Label::kNormal;
};
// Scores every edge of `graphs` with history starting at graphs.front().
std::vector<ScoredEdge> ScoreEdges(const ModelParams& params,
                                   std::span<const GraphSnapshot* const> graphs);

struct ScoredWindow {
  int64_t t = 0;
  double score = 0.0;  // squared distance to the center
  Label label = Label::kNormal;
  bool skipped = false;  // empty window, verdict normal
};
std::vector<ScoredWindow> ScoreIntervals(const ModelParams& params,
                                         std::span<const GraphSnapshot* const> graphs);

std::vector<ScoredItem> EdgeItems(std::span<const ScoredEdge> edges);
// Skipped windows are left out.
std::vector<ScoredItem> WindowItems(std::span<const ScoredWindow> windows);

// F-1 at the best validation threshold; nullopt without edges.
std::optional<double> BestF1(std::span<const ScoredItem> items);

struct SynthConfig {
  int windows = 200;
  double rate = 0.05;
  uint64_t seed = 7;
  int workers = 3;
  int users = 4;
  int buyers = 2;
  // Requests the coordinator sends each worker per window.
  int dispatch_per_worker = 3;
  int64_t window_ms = 60000;
  int64_t start_ms = 1700000000000;
};

// Coordinator/worker and shop logs with two injected anomaly kinds: a
// worker's dispatch volume times ten, and a payment by a user who never
// buys. Exactly round(windows * rate) windows carry an anomaly.
std::vector<LogRecord> GenerateSynthetic(const SynthConfig& config);
// JSONL with the default ingest keys ts/msg/label/src.
void WriteSyntheticJsonl(const std::string& path, std::span<const LogRecord> records);

}  // namespace glad

#endif  // GLAD_EVAL_H_
