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

#include "glad/eval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "glad/common.h"

namespace glad {

namespace {

std::string FormatMetric(const std::optional<double>& v) {
  return v ? fmt::format("{:.4f}", *v) : std::string("undefined");
}

nlohmann::json OptionalJson(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

// Indices sorted by descending score, ties by ascending id.
std::vector<size_t> RankOrder(std::span<const ScoredItem> items) {
  std::vector<size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (items[a].score != items[b].score) return items[a].score > items[b].score;
    return items[a].id < items[b].id;
  });
  return order;
}

}  // namespace

nlohmann::json MetricsReport::ToJson() const {
  return {{"protocol", protocol},   {"precision", precision},
          {"recall", recall},       {"f1", f1},
          {"auc", OptionalJson(auc)}, {"aupr", OptionalJson(aupr)},
          {"threshold", threshold}, {"threshold_fallback", threshold_fallback},
          {"n_pos", n_pos},         {"n_neg", n_neg}};
}

MetricsReport MetricsReport::FromJson(const nlohmann::json& j) {
  MetricsReport r;
  try {
    r.protocol = j.at("protocol").get<std::string>();
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.f1 = j.at("f1").get<double>();
    if (!j.at("auc").is_null()) r.auc = j.at("auc").get<double>();
    if (!j.at("aupr").is_null()) r.aupr = j.at("aupr").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.threshold_fallback = j.at("threshold_fallback").get<bool>();
    r.n_pos = j.at("n_pos").get<int64_t>();
    r.n_neg = j.at("n_neg").get<int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metrics report: ") + e.what());
  }
  return r;
}

std::string MetricsReport::ToTable() const {
  std::string out = fmt::format("protocol   {}\n", protocol);
  out += fmt::format("precision  {:.4f}\n", precision);
  out += fmt::format("recall     {:.4f}\n", recall);
  out += fmt::format("f1         {:.4f}\n", f1);
  out += fmt::format("auc        {}\n", FormatMetric(auc));
  out += fmt::format("aupr       {}\n", FormatMetric(aupr));
  out += fmt::format("threshold  {:.6g}{}\n", threshold, threshold_fallback ? " (fallback)" : "");
  out += fmt::format("n_pos      {}\n", n_pos);
  out += fmt::format("n_neg      {}\n", n_neg);
  return out;
}

SplitRanges SplitSequences(size_t n) {
  if (n < 10) {
    throw DataError(fmt::format("need at least 10 windows for a 6:1:3 split, got {}", n));
  }
  SplitRanges s;
  s.train_end = n * 6 / 10;
  s.val_end = s.train_end + n / 10;
  return s;
}

std::optional<double> Auc(std::span<const ScoredItem> items) {
  std::vector<size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return items[a].score < items[b].score; });
  double pos_rank_sum = 0.0;
  int64_t n_pos = 0;
  for (size_t a = 0; a < order.size();) {
    size_t b = a;
    while (b < order.size() && items[order[b]].score == items[order[a]].score) ++b;
    // Ranks a+1 .. b share their average.
    const double avg = 0.5 * static_cast<double>(a + 1 + b);
    for (size_t r = a; r < b; ++r) {
      if (items[order[r]].positive) {
        pos_rank_sum += avg;
        ++n_pos;
      }
    }
    a = b;
  }
  const int64_t n_neg = static_cast<int64_t>(items.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::optional<double> AveragePrecision(std::span<const ScoredItem> items) {
  const std::vector<size_t> order = RankOrder(items);
  int64_t n_pos = 0;
  for (const ScoredItem& it : items) n_pos += it.positive ? 1 : 0;
  if (n_pos == 0 || n_pos == static_cast<int64_t>(items.size())) return std::nullopt;
  double sum = 0.0;
  int64_t hits = 0;
  for (size_t k = 0; k < order.size(); ++k) {
    if (!items[order[k]].positive) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(n_pos);
}

double Confusion::Precision() const {
  return tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
}

double Confusion::Recall() const {
  return tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
}

double Confusion::F1() const {
  const double p = Precision();
  const double r = Recall();
  return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
}

Confusion Classify(std::span<const ScoredItem> items, double threshold, bool strict) {
  Confusion c;
  for (const ScoredItem& it : items) {
    const bool flagged = strict ? it.score > threshold : it.score >= threshold;
    if (flagged) {
      (it.positive ? c.tp : c.fp)++;
    } else {
      (it.positive ? c.fn : c.tn)++;
    }
  }
  return c;
}

double NearestRankPercentile(std::vector<double> values, double p) {
  if (values.empty()) throw UsageError("percentile of an empty sample");
  if (!(p > 0.0 && p <= 1.0)) throw UsageError("percentile must lie in (0, 1]");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  // The small slack keeps products such as 0.3 * 10 from rounding up a rank.
  auto rank = static_cast<size_t>(std::ceil(p * n - 1e-9));
  rank = std::clamp<size_t>(rank, 1, values.size());
  return values[rank - 1];
}

ThresholdChoice ChooseThreshold(std::span<const ScoredItem> items, double anomaly_prior) {
  if (items.empty()) throw DataError("cannot choose a threshold without scored items");
  const bool any_positive =
      std::any_of(items.begin(), items.end(), [](const ScoredItem& it) { return it.positive; });
  if (!any_positive) {
    std::vector<double> scores;
    for (const ScoredItem& it : items) scores.push_back(it.score);
    const double p = std::clamp(1.0 - anomaly_prior, 1e-12, 1.0);
    return {NearestRankPercentile(std::move(scores), p), true};
  }
  // Sweep distinct scores from high to low, accumulating counts.
  const std::vector<size_t> order = RankOrder(items);
  int64_t total_pos = 0;
  for (const ScoredItem& it : items) total_pos += it.positive ? 1 : 0;
  ThresholdChoice best{items[order.front()].score, false};
  double best_f1 = -1.0;
  double best_precision = -1.0;
  int64_t tp = 0, fp = 0;
  for (size_t k = 0; k < order.size();) {
    const double s = items[order[k]].score;
    while (k < order.size() && items[order[k]].score == s) {
      (items[order[k]].positive ? tp : fp)++;
      ++k;
    }
    const Confusion c{tp, fp, total_pos - tp, 0};
    const double f1 = c.F1();
    const double precision = c.Precision();
    if (f1 > best_f1 || (f1 == best_f1 && precision > best_precision)) {
      best_f1 = f1;
      best_precision = precision;
      best.threshold = s;
    }
  }
  return best;
}

MetricsReport ComputeMetrics(std::string protocol, std::span<const ScoredItem> items,
                             double threshold, bool strict) {
  MetricsReport r;
  r.protocol = std::move(protocol);
  r.threshold = threshold;
  const Confusion c = Classify(items, threshold, strict);
  r.precision = c.Precision();
  r.recall = c.Recall();
  r.f1 = c.F1();
  r.n_pos = c.tp + c.fn;
  r.n_neg = c.fp + c.tn;
  r.auc = Auc(items);
  r.aupr = AveragePrecision(items);
  return r;
}

std::vector<ScoredEdge> ScoreEdges(const ModelParams& params,
                                   std::span<const GraphSnapshot* const> graphs) {
  std::vector<ScoredEdge> out;
  bool any = std::any_of(graphs.begin(), graphs.end(),
                         [](const GraphSnapshot* g) { return !g->empty(); });
  if (!any) return out;
  const std::vector<nn::Matrix> h = TemporalEncode(params, graphs);
  size_t next = 0;
  for (const GraphSnapshot* g : graphs) {
    if (g->empty()) continue;
    const nn::Matrix& hg = h[next++];
    for (size_t e = 0; e < g->edges.size(); ++e) {
      ScoredEdge s;
      s.t = g->t;
      s.edge = e;
      s.score = EdgeScore(hg, g->edges[e], params.w1, params.w2, params.config.mu);
      s.label = e < g->edge_labels.size() ? g->edge_labels[e] : Label::kNormal;
      out.push_back(s);
    }
  }
  return out;
}

std::vector<ScoredWindow> ScoreIntervals(const ModelParams& params,
                                         std::span<const GraphSnapshot* const> graphs) {
  if (params.center.size() == 0) throw UsageError("model has no hypersphere center");
  std::vector<ScoredWindow> out;
  bool any = std::any_of(graphs.begin(), graphs.end(),
                         [](const GraphSnapshot* g) { return !g->empty(); });
  std::vector<nn::Matrix> h;
  if (any) h = TemporalEncode(params, graphs);
  size_t next = 0;
  for (const GraphSnapshot* g : graphs) {
    ScoredWindow w;
    w.t = g->t;
    w.label = g->window_label == Label::kAnomalous ? Label::kAnomalous : Label::kNormal;
    if (g->empty()) {
      w.skipped = true;
    } else {
      w.score = nn::L2NormSq(nn::MaxPoolCols(h[next++]) - params.center);
    }
    out.push_back(w);
  }
  return out;
}

std::vector<ScoredItem> EdgeItems(std::span<const ScoredEdge> edges) {
  std::vector<ScoredItem> out;
  out.reserve(edges.size());
  for (size_t k = 0; k < edges.size(); ++k) {
    out.push_back({static_cast<int64_t>(k), edges[k].score, edges[k].label == Label::kAnomalous});
  }
  return out;
}

std::vector<ScoredItem> WindowItems(std::span<const ScoredWindow> windows) {
  std::vector<ScoredItem> out;
  for (const ScoredWindow& w : windows) {
    if (w.skipped) continue;
    out.push_back({w.t, w.score, w.label == Label::kAnomalous});
  }
  return out;
}

std::optional<double> BestF1(std::span<const ScoredItem> items) {
  if (items.empty()) return std::nullopt;
  const ThresholdChoice choice = ChooseThreshold(items, 0.05);
  return Classify(items, choice.threshold).F1();
}

std::vector<LogRecord> GenerateSynthetic(const SynthConfig& config) {
  if (config.windows < 1 || config.workers < 1 || config.users < 1 || config.buyers < 0 ||
      config.buyers > config.users || config.window_ms < 1 || config.dispatch_per_worker < 1) {
    throw UsageError(
        "synthetic workload needs windows, workers, users, dispatches >= 1 and buyers <= users");
  }
  if (!(config.rate >= 0.0 && config.rate <= 1.0)) {
    throw UsageError("anomaly rate must lie in [0, 1]");
  }
  Rng rng(config.seed);
  static const char* kNames[] = {"alice", "bob",   "carol", "dave", "erin",  "frank",
                                 "grace", "heidi", "ivan",  "judy", "mallory", "oscar"};
  std::vector<std::string> users;
  for (int u = 0; u < config.users; ++u) {
    std::string name = kNames[u % std::size(kNames)];
    if (u >= static_cast<int>(std::size(kNames))) name += std::to_string(u / std::size(kNames));
    users.push_back(name);
  }
  auto worker_name = [](int w) { return fmt::format("worker-{:02d}", w + 1); };

  // Evenly spaced anomalous windows with bounded jitter, alternating kinds.
  const auto n_anomalous =
      static_cast<int>(std::llround(static_cast<double>(config.windows) * config.rate));
  std::vector<int> kind(static_cast<size_t>(config.windows), 0);
  if (n_anomalous > 0) {
    const double spacing = static_cast<double>(config.windows) / n_anomalous;
    const auto jitter = static_cast<int64_t>(std::max(0.0, std::floor(spacing / 4.0)));
    for (int k = 0; k < n_anomalous; ++k) {
      const auto center = static_cast<int64_t>(std::floor((k + 0.5) * spacing));
      const int64_t offset =
          static_cast<int64_t>(rng.Below(static_cast<uint64_t>(2 * jitter + 1))) - jitter;
      const int64_t w = std::clamp<int64_t>(center + offset, 0, config.windows - 1);
      const bool can_pay = config.users > config.buyers;
      kind[static_cast<size_t>(w)] = (k % 2 == 1 && can_pay) ? 2 : 1;
    }
  }

  std::vector<LogRecord> out;
  for (int w = 0; w < config.windows; ++w) {
    std::vector<std::pair<std::string, Label>> lines;
    std::vector<int> dispatch(static_cast<size_t>(config.workers));
    for (int k = 0; k < config.workers; ++k) {
      dispatch[static_cast<size_t>(k)] = config.dispatch_per_worker;
      for (int r = 0; r < dispatch[static_cast<size_t>(k)]; ++r) {
        lines.emplace_back("dispatch request from service frontend to server " + worker_name(k),
                           Label::kNormal);
      }
    }
    for (int u = 0; u < config.users; ++u) {
      const int browses = 1 + static_cast<int>(rng.Below(2));
      for (int r = 0; r < browses; ++r) {
        lines.emplace_back("catalogue browse by user " + users[static_cast<size_t>(u)],
                           Label::kNormal);
      }
      if (u < config.buyers) {
        lines.emplace_back("cart updated with new item for user " + users[static_cast<size_t>(u)],
                           Label::kNormal);
        lines.emplace_back("payment accepted for user " + users[static_cast<size_t>(u)],
                           Label::kNormal);
      }
    }
    if (kind[static_cast<size_t>(w)] == 1) {
      const auto k = static_cast<int>(rng.Below(static_cast<uint64_t>(config.workers)));
      for (int r = 0; r < 9 * dispatch[static_cast<size_t>(k)]; ++r) {
        lines.emplace_back("dispatch request from service frontend to server " + worker_name(k),
                           Label::kAnomalous);
      }
    } else if (kind[static_cast<size_t>(w)] == 2) {
      const auto u = config.buyers + static_cast<int>(rng.Below(
                                         static_cast<uint64_t>(config.users - config.buyers)));
      lines.emplace_back("payment accepted for user " + users[static_cast<size_t>(u)],
                         Label::kAnomalous);
    }
    for (size_t i = lines.size(); i > 1; --i) std::swap(lines[i - 1], lines[rng.Below(i)]);
    const int64_t start = config.start_ms + static_cast<int64_t>(w) * config.window_ms;
    for (size_t i = 0; i < lines.size(); ++i) {
      LogRecord r;
      r.raw_text = lines[i].first;
      r.timestamp_ms =
          start + static_cast<int64_t>(i) * config.window_ms / static_cast<int64_t>(lines.size());
      r.source_id = r.raw_text.starts_with("dispatch") ? "frontend" : "shop";
      r.label = lines[i].second;
      out.push_back(std::move(r));
    }
  }
  return out;
}

void WriteSyntheticJsonl(const std::string& path, std::span<const LogRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const LogRecord& r : records) {
    nlohmann::json line = {{"ts", r.timestamp_ms},
                           {"msg", r.raw_text},
                           {"label", LabelName(r.label)},
                           {"src", r.source_id}};
    out << line.dump() << '\n';
  }
  if (!out) throw DataError("error while writing " + path);
}

}  // namespace glad
