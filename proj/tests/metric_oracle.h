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

// Brute-force ranking metrics: AUC by counting every positive/negative
// pair, average precision by walking every cut of the ranked list.

#ifndef GLAD_TESTS_METRIC_ORACLE_H_
#define GLAD_TESTS_METRIC_ORACLE_H_

#include <optional>
#include <span>
#include <vector>

#include "glad/eval.h"

namespace glad::testing {

inline std::optional<double> OracleAuc(std::span<const ScoredItem> items) {
  int64_t pos = 0;
  int64_t neg = 0;
  double wins = 0.0;
  for (const ScoredItem& p : items) {
    if (!p.positive) continue;
    ++pos;
    for (const ScoredItem& n : items) {
      if (n.positive) continue;
      if (p.score > n.score) wins += 1.0;
      if (p.score == n.score) wins += 0.5;
    }
  }
  for (const ScoredItem& n : items) neg += n.positive ? 0 : 1;
  if (pos == 0 || neg == 0) return std::nullopt;
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

// `a` comes before `b`: higher score, or equal score and smaller id.
inline bool RanksBefore(const ScoredItem& a, const ScoredItem& b) {
  return a.score > b.score || (a.score == b.score && a.id < b.id);
}

inline std::optional<double> OracleAveragePrecision(std::span<const ScoredItem> items) {
  const size_t n = items.size();
  std::vector<const ScoredItem*> at(n, nullptr);
  for (const ScoredItem& it : items) {
    size_t rank = 0;
    for (const ScoredItem& other : items) rank += RanksBefore(other, it) ? 1 : 0;
    at[rank] = &it;
  }
  int64_t total_pos = 0;
  for (const ScoredItem& it : items) total_pos += it.positive ? 1 : 0;
  if (total_pos == 0 || total_pos == static_cast<int64_t>(n)) return std::nullopt;
  double sum = 0.0;
  for (size_t cut = 1; cut <= n; ++cut) {
    if (!at[cut - 1]->positive) continue;
    int64_t tp = 0;
    for (size_t k = 0; k < cut; ++k) tp += at[k]->positive ? 1 : 0;
    sum += static_cast<double>(tp) / static_cast<double>(cut);
  }
  return sum / static_cast<double>(total_pos);
}

}  // namespace glad::testing

#endif  // GLAD_TESTS_METRIC_ORACLE_H_
