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

#include "glad/graph_build.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "glad/common.h"

namespace glad {
namespace {

constexpr char kMatrixMagic[8] = {'G', 'L', 'A', 'D', 'M', 'A', 'T', '1'};

std::string SnapshotStem(int64_t t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "graph_%06lld", static_cast<long long>(t));
  return buf;
}

nlohmann::json NodeToJson(const NodeKey& key) {
  nlohmann::json j = {{"kind", key.kind == NodeKind::kEvent ? "event" : "field"},
                      {"text", key.text}};
  j["type"] = key.field_type ? nlohmann::json(FieldTypeName(*key.field_type))
                             : nlohmann::json(nullptr);
  return j;
}

NodeKey NodeFromJson(const nlohmann::json& j) {
  NodeKey key;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "event") {
    key.kind = NodeKind::kEvent;
  } else if (kind == "field") {
    key.kind = NodeKind::kField;
    auto type = ParseFieldType(j.at("type").get<std::string>());
    if (!type) throw DataError("unknown field type in snapshot node");
    key.field_type = *type;
  } else {
    throw DataError("unknown node kind: " + kind);
  }
  key.text = j.at("text").get<std::string>();
  return key;
}

}  // namespace

nn::Matrix GraphSnapshot::Adjacency() const {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  nn::Matrix a = nn::Matrix::Zero(n, n);
  for (const Edge& e : edges) {
    a(e.i, e.j) = static_cast<double>(e.w);
    a(e.j, e.i) = static_cast<double>(e.w);
  }
  return a;
}

std::vector<double> GraphSnapshot::Degrees() const {
  std::vector<double> d(nodes.size(), 0.0);
  for (const Edge& e : edges) {
    d[e.i] += static_cast<double>(e.w);
    d[e.j] += static_cast<double>(e.w);
  }
  return d;
}

bool GraphSnapshot::HasEdge(int a, int b) const {
  const int lo = std::min(a, b);
  const int hi = std::max(a, b);
  return std::any_of(edges.begin(), edges.end(),
                     [&](const Edge& e) { return e.i == lo && e.j == hi; });
}

GraphSnapshot BuildSnapshot(int64_t t, std::span<const ParsedLog> window,
                            const TemplateTexts& templates, const Embedder& embedder) {
  GraphSnapshot g;
  g.t = t;
  std::set<std::string> event_ids;
  std::set<std::pair<FieldType, std::string>> fields;
  for (const ParsedLog& log : window) {
    if (log.template_id.empty()) throw DataError("parsed log without a template id");
    event_ids.insert(log.template_id);
    for (const FieldMention& m : log.mentions) fields.emplace(m.field_type, m.text);
    if (log.record.label == Label::kAnomalous) g.window_label = Label::kAnomalous;
  }
  std::map<std::string, int> event_index;
  for (const std::string& id : event_ids) {
    auto it = templates.find(id);
    if (it == templates.end()) throw DataError("unknown template id in window: " + id);
    event_index[id] = static_cast<int>(g.nodes.size());
    g.nodes.push_back(NodeKey{NodeKind::kEvent, std::nullopt, it->second});
  }
  std::map<std::pair<FieldType, std::string>, int> field_index;
  for (const auto& [type, text] : fields) {
    field_index[{type, text}] = static_cast<int>(g.nodes.size());
    g.nodes.push_back(NodeKey{NodeKind::kField, type, text});
  }

  struct Accum {
    int64_t w = 0;
    std::set<size_t> contributors;
  };
  std::map<std::pair<int, int>, Accum> edges;
  for (const ParsedLog& log : window) {
    const int i = event_index.at(log.template_id);
    for (const FieldMention& m : log.mentions) {
      Accum& acc = edges[{i, field_index.at({m.field_type, m.text})}];
      ++acc.w;
      acc.contributors.insert(log.record_index);
    }
  }
  for (auto& [key, acc] : edges) {
    g.edges.push_back(Edge{key.first, key.second, acc.w});
    g.contributors.emplace_back(acc.contributors.begin(), acc.contributors.end());
  }

  g.x = nn::Matrix::Zero(static_cast<Eigen::Index>(g.nodes.size()), embedder.dim());
  for (size_t r = 0; r < g.nodes.size(); ++r) {
    const std::vector<double> v = embedder.Embed(NodeText(g.nodes[r]));
    if (static_cast<int>(v.size()) != embedder.dim()) {
      throw DataError("embedder returned a vector of the wrong dimension");
    }
    g.x.row(static_cast<Eigen::Index>(r)) =
        Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return g;
}

std::vector<GraphSnapshot> BuildSnapshots(std::span<const ParsedLog> logs, int64_t interval_ms,
                                          const TemplateTexts& templates,
                                          const Embedder& embedder) {
  if (interval_ms <= 0) throw UsageError("window interval must be positive");
  std::vector<GraphSnapshot> out;
  if (logs.empty()) return out;
  size_t max_index = 0;
  for (const ParsedLog& log : logs) max_index = std::max(max_index, log.record_index);
  std::vector<Label> record_labels(max_index + 1, Label::kUnlabeled);
  for (const ParsedLog& log : logs) record_labels[log.record_index] = log.record.label;

  const int64_t origin = logs.front().record.timestamp_ms;
  size_t begin = 0;
  int64_t t = 0;
  while (begin < logs.size()) {
    const int64_t end_ms = origin + (t + 1) * interval_ms;
    size_t end = begin;
    while (end < logs.size() && logs[end].record.timestamp_ms < end_ms) {
      if (logs[end].record.timestamp_ms < origin + t * interval_ms) {
        throw UsageError("parsed logs are not sorted by timestamp");
      }
      ++end;
    }
    GraphSnapshot g = BuildSnapshot(t, logs.subspan(begin, end - begin), templates, embedder);
    g.start_ms = origin + t * interval_ms;
    g.edge_labels = LabelEdges(g, record_labels);
    out.push_back(std::move(g));
    begin = end;
    ++t;
  }
  return out;
}

std::vector<Label> LabelEdges(const GraphSnapshot& snapshot,
                              std::span<const Label> record_labels) {
  std::vector<Label> labels(snapshot.edges.size(), Label::kNormal);
  for (size_t e = 0; e < snapshot.contributors.size(); ++e) {
    for (size_t r : snapshot.contributors[e]) {
      if (r >= record_labels.size()) throw DataError("edge contributor without a record label");
      if (record_labels[r] == Label::kAnomalous) labels[e] = Label::kAnomalous;
    }
  }
  return labels;
}

SelfLoopForm WithSelfLoops(const nn::Matrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw UsageError("adjacency must be square");
  SelfLoopForm out;
  out.a_hat = adjacency + nn::Matrix::Identity(adjacency.rows(), adjacency.cols());
  out.d_hat = nn::Matrix::Zero(adjacency.rows(), adjacency.cols());
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) out.d_hat(i, i) = out.a_hat.row(i).sum();
  return out;
}

nn::SparseMatrix NormalizedAdjacency(const GraphSnapshot& snapshot) {
  const auto n = static_cast<Eigen::Index>(snapshot.nodes.size());
  std::vector<double> d = snapshot.Degrees();
  for (double& x : d) x += 1.0;
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0 / d[i]);
  for (const Edge& e : snapshot.edges) {
    const double v = static_cast<double>(e.w) / std::sqrt(d[e.i] * d[e.j]);
    triplets.emplace_back(e.i, e.j, v);
    triplets.emplace_back(e.j, e.i, v);
  }
  nn::SparseMatrix p(n, n);
  p.setFromTriplets(triplets.begin(), triplets.end());
  return p;
}

nlohmann::json SnapshotToJson(const GraphSnapshot& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const NodeKey& k : g.nodes) nodes.push_back(NodeToJson(k));
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : g.edges) edges.push_back({e.i, e.j, e.w});
  nlohmann::json labels = nlohmann::json::array();
  for (Label l : g.edge_labels) labels.push_back(LabelName(l));
  return {{"t", g.t},
          {"start_ms", g.start_ms},
          {"window_label", LabelName(g.window_label)},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"labels", std::move(labels)},
          {"contributors", g.contributors}};
}

GraphSnapshot SnapshotFromJson(const nlohmann::json& j) {
  try {
    GraphSnapshot g;
    g.t = j.at("t").get<int64_t>();
    g.start_ms = j.value("start_ms", int64_t{0});
    auto wl = ParseLabel(j.value("window_label", "normal"));
    if (!wl) throw DataError("bad window label");
    g.window_label = *wl;
    for (const auto& n : j.at("nodes")) g.nodes.push_back(NodeFromJson(n));
    const int n = static_cast<int>(g.nodes.size());
    for (const auto& e : j.at("edges")) {
      Edge edge{e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int64_t>()};
      if (edge.i < 0 || edge.j >= n || edge.i >= edge.j || edge.w < 1) {
        throw DataError("invalid edge in snapshot " + std::to_string(g.t));
      }
      g.edges.push_back(edge);
    }
    for (const auto& l : j.value("labels", nlohmann::json::array())) {
      auto label = ParseLabel(l.get<std::string>());
      if (!label) throw DataError("bad edge label");
      g.edge_labels.push_back(*label);
    }
    if (!g.edge_labels.empty() && g.edge_labels.size() != g.edges.size()) {
      throw DataError("edge labels do not align with edges");
    }
    g.contributors =
        j.value("contributors", std::vector<std::vector<size_t>>(g.edges.size()));
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed snapshot: ") + e.what());
  }
}

void WriteMatrixBinary(const std::string& path, const nn::Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  const int64_t rows = m.rows();
  const int64_t cols = m.cols();
  out.write(kMatrixMagic, sizeof(kMatrixMagic));
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!out) throw DataError("error while writing " + path);
}

nn::Matrix ReadMatrixBinary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  char magic[8];
  int64_t rows = 0;
  int64_t cols = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || !std::equal(magic, magic + 8, kMatrixMagic) || rows < 0 || cols < 0) {
    throw DataError("not a matrix file: " + path);
  }
  nn::Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw DataError("truncated matrix file: " + path);
  return m;
}

void WriteSnapshots(const std::string& dir, std::span<const GraphSnapshot> snapshots) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json index = {{"windows", nlohmann::json::array()}};
  for (const GraphSnapshot& g : snapshots) {
    const std::string stem = SnapshotStem(g.t);
    std::ofstream out(fs::path(dir) / (stem + ".json"));
    if (!out) throw DataError("cannot write snapshot " + stem);
    out << SnapshotToJson(g).dump() << "\n";
    WriteMatrixBinary((fs::path(dir) / (stem + ".x.bin")).string(), g.x);
    index["windows"].push_back({{"t", g.t}, {"file", stem + ".json"}});
  }
  std::ofstream out(fs::path(dir) / "index.json");
  if (!out) throw DataError("cannot write snapshot index in " + dir);
  out << index.dump(2) << "\n";
}

std::vector<GraphSnapshot> ReadSnapshots(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "index.json");
  if (!in) throw DataError("no snapshot index in " + dir);
  nlohmann::json index = nlohmann::json::parse(in, nullptr, false);
  if (index.is_discarded()) throw DataError("snapshot index is not valid JSON");
  std::vector<GraphSnapshot> out;
  for (const auto& w : index.at("windows")) {
    const std::string file = w.at("file").get<std::string>();
    std::ifstream gin(fs::path(dir) / file);
    if (!gin) throw DataError("missing snapshot file " + file);
    nlohmann::json j = nlohmann::json::parse(gin, nullptr, false);
    if (j.is_discarded()) throw DataError("snapshot is not valid JSON: " + file);
    GraphSnapshot g = SnapshotFromJson(j);
    const std::string stem = file.substr(0, file.size() - 5);
    g.x = ReadMatrixBinary((fs::path(dir) / (stem + ".x.bin")).string());
    if (g.x.rows() != static_cast<Eigen::Index>(g.nodes.size())) {
      throw DataError("attribute rows do not match nodes in " + file);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace glad
