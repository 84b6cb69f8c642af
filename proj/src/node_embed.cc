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

#include "glad/node_embed.h"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "glad/common.h"

namespace glad {
namespace {

constexpr uint64_t kUnigramSeed = 0x9e3779b97f4a7c15ULL;
constexpr uint64_t kTrigramSeed = 0xc2b2ae3d27d4eb4fULL;

void AddFeature(std::string_view feature, uint64_t seed, std::vector<double>& v) {
  uint64_t h = Fnv1a64(feature, seed);
  // Finalizer so that bucket and sign use well-mixed bits.
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  const size_t bucket = static_cast<size_t>(h % v.size());
  v[bucket] += (h >> 63) ? -1.0 : 1.0;
}

}  // namespace

std::string NodeText(const NodeKey& key) {
  if (key.kind == NodeKind::kEvent) return key.text;
  if (!key.field_type) throw UsageError("field node without a field type");
  return BuildPrompt(key.text, key.field_type, PromptTemplate::kP1, Polarity::kPositive);
}

std::vector<double> HashEmbed(std::string_view text, int dim) {
  if (dim < 8) throw UsageError("embedding dimension must be >= 8");
  if (Trim(text).empty()) throw UsageError("cannot embed empty text");
  std::string lower(text);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  std::vector<double> v(static_cast<size_t>(dim), 0.0);
  std::istringstream words(lower);
  std::string word;
  while (words >> word) AddFeature(word, kUnigramSeed, v);
  const std::string padded = " " + lower + " ";
  for (size_t i = 0; i + 3 <= padded.size(); ++i) {
    AddFeature(std::string_view(padded).substr(i, 3), kTrigramSeed, v);
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  // Full cancellation leaves the zero vector.
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

HashEmbedder::HashEmbedder(int dim) : dim_(dim) {
  if (dim < 8) throw UsageError("embedding dimension must be >= 8");
}

std::unordered_map<std::string, std::vector<double>> LoadEmbeddings(const std::string& path,
                                                                    int dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read embedding file: " + path);
  std::unordered_map<std::string, std::vector<double>> table;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) + ": missing tab separator");
    }
    std::string text = line.substr(0, tab);
    std::istringstream values(line.substr(tab + 1));
    std::vector<double> v;
    double x;
    while (values >> x) v.push_back(x);
    if (!values.eof()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": malformed float");
    }
    if (static_cast<int>(v.size()) != dim) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(dim) + " values, got " + std::to_string(v.size()));
    }
    if (!table.emplace(text, std::move(v)).second) {
      throw DataError(path + ":" + std::to_string(line_no) + ": duplicate text '" + text + "'");
    }
  }
  return table;
}

TableEmbedder::TableEmbedder(std::unordered_map<std::string, std::vector<double>> table,
                             int dim)
    : table_(std::move(table)), dim_(dim) {
  for (const auto& [text, v] : table_) {
    if (static_cast<int>(v.size()) != dim_) {
      throw DataError("embedding for '" + text + "' has the wrong dimension");
    }
  }
}

std::vector<double> TableEmbedder::Embed(const std::string& text) const {
  auto it = table_.find(text);
  if (it != table_.end()) return it->second;
  return HashEmbed(text, dim_);
}

}  // namespace glad
