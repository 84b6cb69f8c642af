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

#ifndef GLAD_GRAPH_BUILD_H_
#define GLAD_GRAPH_BUILD_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "glad/field_extract.h"
#include "glad/ingest.h"
#include "glad/matrix.h"
#include "glad/node_embed.h"
#include "json.hpp"

namespace glad {

struct Edge {
  int i = 0;  // event node
  int j = 0;  // field node, i < j
  int64_t w = 1;
};

// One window's event/field graph. Events come first (sorted by template
// id), then fields (sorted by type, then text), so every edge has i < j.
struct GraphSnapshot {
  int64_t t = 0;
  int64_t start_ms = 0;
  Label window_label = Label::kNormal;
  std::vector<NodeKey> nodes;
  nn::Matrix x;  // one attribute row per node
  std::vector<Edge> edges;
  std::vector<Label> edge_labels;  // empty until LabelEdges runs
  std::vector<std::vector<size_t>> contributors;  // record indices per edge

  size_t node_count() const { return nodes.size(); }
  bool empty() const { return nodes.empty(); }

  // Dense symmetric weighted adjacency with zero diagonal.
  nn::Matrix Adjacency() const;
  // Weighted degree of every node without self-loops.
  std::vector<double> Degrees() const;
  bool HasEdge(int a, int b) const;
};

// Template id -> template text.
using TemplateTexts = std::unordered_map<std::string, std::string>;

GraphSnapshot BuildSnapshot(int64_t t, std::span<const ParsedLog> window,
                            const TemplateTexts& templates, const Embedder& embedder);

// Groups time-sorted parsed logs into tumbling windows (see WindowSegment)
// and builds one snapshot per window, empty windows included.
std::vector<GraphSnapshot> BuildSnapshots(std::span<const ParsedLog> logs, int64_t interval_ms,
                                          const TemplateTexts& templates,
                                          const Embedder& embedder);

// Anomalous iff any contributing record is anomalous. `record_labels` is
// indexed by record index.
std::vector<Label> LabelEdges(const GraphSnapshot& snapshot,
                              std::span<const Label> record_labels);

struct SelfLoopForm {
  nn::Matrix a_hat;  // A + I
  nn::Matrix d_hat;  // diagonal row sums of a_hat
};
SelfLoopForm WithSelfLoops(const nn::Matrix& adjacency);

// D^-1/2 (A + I) D^-1/2 as a sparse matrix.
nn::SparseMatrix NormalizedAdjacency(const GraphSnapshot& snapshot);

// JSON without the attribute matrix; X goes to a sidecar binary file.
nlohmann::json SnapshotToJson(const GraphSnapshot& snapshot);
GraphSnapshot SnapshotFromJson(const nlohmann::json& j);

void WriteMatrixBinary(const std::string& path, const nn::Matrix& m);
nn::Matrix ReadMatrixBinary(const std::string& path);

// Directory layout: graph_<t>.json + graph_<t>.x.bin, plus index.json
// listing the windows in order.
void WriteSnapshots(const std::string& dir, std::span<const GraphSnapshot> snapshots);
std::vector<GraphSnapshot> ReadSnapshots(const std::string& dir);

}  // namespace glad

#endif  // GLAD_GRAPH_BUILD_H_
