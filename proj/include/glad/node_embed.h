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

#ifndef GLAD_NODE_EMBED_H_
#define GLAD_NODE_EMBED_H_

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "glad/field_extract.h"

namespace glad {

enum class NodeKind { kEvent, kField };

struct NodeKey {
  NodeKind kind = NodeKind::kEvent;
  std::optional<FieldType> field_type;  // set iff kind == kField
  std::string text;

  friend auto operator<=>(const NodeKey&, const NodeKey&) = default;
};

// Events use their template verbatim; fields use the P1 positive prompt.
std::string NodeText(const NodeKey& key);

inline constexpr int kDefaultEmbedDim = 768;

// Signed feature hashing of lowercased word unigrams and character
// trigrams, L2-normalized. Throws UsageError on empty text or dim < 8.
std::vector<double> HashEmbed(std::string_view text, int dim = kDefaultEmbedDim);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual int dim() const = 0;
  virtual std::vector<double> Embed(const std::string& text) const = 0;
};

class HashEmbedder : public Embedder {
 public:
  explicit HashEmbedder(int dim = kDefaultEmbedDim);
  int dim() const override { return dim_; }
  std::vector<double> Embed(const std::string& text) const override {
    return HashEmbed(text, dim_);
  }

 private:
  int dim_;
};

// Precomputed vectors keyed by node text. Rows are `text \t f1 ... fd`
// with whitespace separated floats. Throws DataError on a dimension
// mismatch or a duplicate text.
std::unordered_map<std::string, std::vector<double>> LoadEmbeddings(
    const std::string& path, int dim);

// Table lookup with hashing as the fallback for texts not in the table.
class TableEmbedder : public Embedder {
 public:
  TableEmbedder(std::unordered_map<std::string, std::vector<double>> table, int dim);
  int dim() const override { return dim_; }
  std::vector<double> Embed(const std::string& text) const override;

 private:
  std::unordered_map<std::string, std::vector<double>> table_;
  int dim_;
};

}  // namespace glad

#endif  // GLAD_NODE_EMBED_H_
