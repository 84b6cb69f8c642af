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

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "glad/common.h"
#include "glad/field_extract.h"
#include "glad/node_embed.h"
#include "gtest/gtest.h"

namespace glad {
namespace {

ParsedLog Log(size_t index, int64_t ms, const std::string& template_id,
              std::vector<std::pair<FieldType, std::string>> fields,
              Label label = Label::kNormal) {
  ParsedLog log;
  log.record_index = index;
  log.record.timestamp_ms = ms;
  log.record.label = label;
  log.record.raw_text = template_id;
  log.template_id = template_id;
  size_t pos = 0;
  for (auto& [type, text] : fields) {
    FieldMention m;
    m.span = {pos, pos + 1};
    ++pos;
    m.field_type = type;
    m.text = text;
    log.mentions.push_back(m);
  }
  return log;
}

const TemplateTexts kTemplates = {{"f49657b2", "request to server <*> by <*>"},
                                  {"0000000a", "session closed for <*>"}};

TEST(BuildSnapshot, OneLogTwoFields) {
  const std::vector<ParsedLog> window = {
      Log(0, 0, "f49657b2", {{FieldType::kUserName, "u"}, {FieldType::kServer, "s"}})};
  const GraphSnapshot g = BuildSnapshot(0, window, kTemplates, HashEmbedder(16));
  ASSERT_EQ(g.node_count(), 3u);
  ASSERT_EQ(g.edges.size(), 2u);
  for (const Edge& e : g.edges) {
    EXPECT_EQ(e.i, 0);
    EXPECT_EQ(e.w, 1);
  }
  EXPECT_EQ(g.x.rows(), 3);
  EXPECT_EQ(g.x.cols(), 16);
}

TEST(BuildSnapshot, RepeatedRequestsAccumulateWeight) {
  std::vector<ParsedLog> window;
  for (size_t i = 0; i < 28; ++i) {
    window.push_back(Log(i, static_cast<int64_t>(i), "f49657b2", {{FieldType::kUserName, "keven"}}));
  }
  const GraphSnapshot g = BuildSnapshot(0, window, kTemplates, HashEmbedder(16));
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0].w, 28);
  EXPECT_EQ(g.contributors[0].size(), 28u);
}

TEST(BuildSnapshot, EmptyWindow) {
  const GraphSnapshot g = BuildSnapshot(3, {}, kTemplates, HashEmbedder(16));
  EXPECT_TRUE(g.empty());
  EXPECT_TRUE(g.edges.empty());
}

TEST(BuildSnapshot, UnknownTemplateIsDataError) {
  const std::vector<ParsedLog> window = {Log(0, 0, "ffffffff", {})};
  EXPECT_THROW(BuildSnapshot(0, window, kTemplates, HashEmbedder(16)), DataError);
}

TEST(BuildSnapshot, BipartiteAndCanonicalAndReproducible) {
  const std::vector<ParsedLog> window = {
      Log(0, 0, "f49657b2", {{FieldType::kServer, "s1"}, {FieldType::kUserName, "amy"}}),
      Log(1, 1, "0000000a", {{FieldType::kUserName, "amy"}}),
      Log(2, 2, "f49657b2", {{FieldType::kServer, "s2"}, {FieldType::kUserName, "bo"}})};
  const GraphSnapshot a = BuildSnapshot(0, window, kTemplates, HashEmbedder(32));
  const GraphSnapshot b = BuildSnapshot(0, window, kTemplates, HashEmbedder(32));
  for (const Edge& e : a.edges) {
    EXPECT_LT(e.i, e.j);
    EXPECT_EQ(a.nodes[e.i].kind, NodeKind::kEvent);
    EXPECT_EQ(a.nodes[e.j].kind, NodeKind::kField);
  }
  EXPECT_EQ(a.nodes, b.nodes);
  EXPECT_EQ(a.Adjacency(), b.Adjacency());
  EXPECT_EQ(a.x, b.x);
}

TEST(LabelEdges, ContributorScoping) {
  const std::vector<ParsedLog> window = {
      Log(0, 0, "f49657b2", {{FieldType::kUserName, "amy"}}),
      Log(1, 1, "f49657b2", {{FieldType::kUserName, "amy"}}, Label::kAnomalous),
      Log(2, 2, "f49657b2", {{FieldType::kUserName, "amy"}}),
      Log(3, 3, "f49657b2", {{FieldType::kUserName, "bo"}})};
  const GraphSnapshot g = BuildSnapshot(0, window, kTemplates, HashEmbedder(16));
  std::vector<Label> labels = {Label::kNormal, Label::kAnomalous, Label::kNormal, Label::kNormal};
  const std::vector<Label> got = LabelEdges(g, labels);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0], Label::kAnomalous);  // three records, one anomalous
  EXPECT_EQ(got[1], Label::kNormal);
  labels[1] = Label::kNormal;
  for (Label l : LabelEdges(g, labels)) EXPECT_EQ(l, Label::kNormal);
}

TEST(WithSelfLoops, Examples) {
  const SelfLoopForm one = WithSelfLoops(nn::Matrix::Zero(1, 1));
  EXPECT_EQ(one.a_hat(0, 0), 1.0);
  EXPECT_EQ(one.d_hat(0, 0), 1.0);

  nn::Matrix two = nn::Matrix::Zero(2, 2);
  two(0, 1) = two(1, 0) = 2.0;
  const SelfLoopForm t = WithSelfLoops(two);
  EXPECT_EQ(t.d_hat(0, 0), 3.0);
  EXPECT_EQ(t.d_hat(1, 1), 3.0);

  nn::Matrix path = nn::Matrix::Zero(3, 3);
  path(0, 1) = path(1, 0) = path(1, 2) = path(2, 1) = 1.0;
  const SelfLoopForm p = WithSelfLoops(path);
  EXPECT_EQ(p.d_hat(0, 0), 2.0);
  EXPECT_EQ(p.d_hat(1, 1), 3.0);
  EXPECT_EQ(p.d_hat(2, 2), 2.0);
  EXPECT_EQ(p.d_hat(0, 1), 0.0);
}

TEST(NormalizedAdjacency, MatchesDenseForm) {
  const std::vector<ParsedLog> window = {
      Log(0, 0, "f49657b2", {{FieldType::kServer, "s1"}, {FieldType::kUserName, "amy"}}),
      Log(1, 1, "f49657b2", {{FieldType::kServer, "s1"}}),
      Log(2, 2, "0000000a", {{FieldType::kUserName, "amy"}})};
  const GraphSnapshot g = BuildSnapshot(0, window, kTemplates, HashEmbedder(16));
  const SelfLoopForm s = WithSelfLoops(g.Adjacency());
  const nn::Matrix sparse = nn::Matrix(NormalizedAdjacency(g));
  for (Eigen::Index r = 0; r < sparse.rows(); ++r) {
    for (Eigen::Index c = 0; c < sparse.cols(); ++c) {
      const double want = s.a_hat(r, c) / std::sqrt(s.d_hat(r, r) * s.d_hat(c, c));
      EXPECT_NEAR(sparse(r, c), want, 1e-15);
    }
  }
}

TEST(BuildSnapshots, WindowsAndLabels) {
  const std::vector<ParsedLog> logs = {
      Log(0, 0, "f49657b2", {{FieldType::kUserName, "amy"}}),
      Log(1, 59999, "0000000a", {{FieldType::kUserName, "amy"}}, Label::kAnomalous),
      Log(2, 180000, "f49657b2", {{FieldType::kUserName, "bo"}})};
  const std::vector<GraphSnapshot> gs = BuildSnapshots(logs, 60000, kTemplates, HashEmbedder(16));
  ASSERT_EQ(gs.size(), 4u);
  EXPECT_EQ(gs[0].window_label, Label::kAnomalous);
  EXPECT_TRUE(gs[1].empty());
  EXPECT_TRUE(gs[2].empty());
  EXPECT_EQ(gs[3].t, 3);
  EXPECT_EQ(gs[3].window_label, Label::kNormal);
  ASSERT_EQ(gs[0].edge_labels.size(), 2u);
}

TEST(Snapshots, DirectoryRoundTrip) {
  const std::vector<ParsedLog> logs = {
      Log(0, 0, "f49657b2", {{FieldType::kUserName, "amy"}, {FieldType::kServer, "s"}}),
      Log(1, 70000, "0000000a", {{FieldType::kUserName, "amy"}}, Label::kAnomalous)};
  const std::vector<GraphSnapshot> gs = BuildSnapshots(logs, 60000, kTemplates, HashEmbedder(16));
  const auto dir = std::filesystem::temp_directory_path() / "glad_graph_roundtrip";
  std::filesystem::remove_all(dir);
  WriteSnapshots(dir.string(), gs);
  const std::vector<GraphSnapshot> back = ReadSnapshots(dir.string());
  ASSERT_EQ(back.size(), gs.size());
  for (size_t k = 0; k < gs.size(); ++k) {
    EXPECT_EQ(SnapshotToJson(back[k]), SnapshotToJson(gs[k]));
    EXPECT_EQ(back[k].x, gs[k].x);
  }
}

}  // namespace
}  // namespace glad
