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

// Stage functions shared by the command line tool, plus the end-to-end
// pipeline with on-disk artifacts.

#ifndef GLAD_PIPELINE_H_
#define GLAD_PIPELINE_H_

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "glad/eval.h"
#include "glad/field_extract.h"
#include "glad/graph_build.h"
#include "glad/ingest.h"
#include "glad/model.h"
#include "glad/node_embed.h"
#include "glad/template_miner.h"
#include "glad/train.h"
#include "json.hpp"

namespace glad {

nlohmann::json IngestConfigToJson(const IngestConfig& config);
IngestConfig IngestConfigFromJson(const nlohmann::json& j);
nlohmann::json MinerConfigToJson(const MinerConfig& config);
MinerConfig MinerConfigFromJson(const nlohmann::json& j);

struct PipelineConfig {
  std::string input;
  std::string work_dir;
  std::string ruleset;     // empty: built-in rules
  std::string embeddings;  // empty: feature hashing
  IngestConfig ingest;
  int64_t window_ms = kDefaultWindowMs;
  MinerConfig miner;
  int embed_dim = kDefaultEmbedDim;
  ModelConfig model;
  TrainConfig train;
  double anomaly_prior = 0.05;

  nlohmann::json ToJson() const;
  // Requires train.seed. Relative paths are kept as written.
  static PipelineConfig FromJson(const nlohmann::json& j);
  // Referenced files must exist; throws UsageError naming the first miss.
  void Validate() const;
};

// Reads a config file and resolves relative paths against its directory.
PipelineConfig LoadPipelineConfig(const std::string& path);

// ---- Stages ----

struct ParseOutput {
  std::vector<ParsedLog> logs;
  TemplateMiner miner;
};
// Mines templates over all records, then stamps every log with the final
// id of its cluster (ids change while templates generalize).
ParseOutput ParseRecords(std::span<const LogRecord> records, const MinerConfig& config);

void ExtractFields(std::span<ParsedLog> logs, const Ruleset& ruleset);
void ExtractFieldsWithScorer(std::span<ParsedLog> logs, const PromptScorer& scorer,
                             PromptTemplate tmpl);

// Prompt pairs with the extracted mentions as gold.
std::vector<PromptPair> PromptPairsForLogs(std::span<const ParsedLog> logs, int ratio,
                                           uint64_t seed, PromptTemplate tmpl);
nlohmann::json PromptPairToJson(const PromptPair& pair);

TemplateTexts TemplateTextsOf(const TemplateMiner& miner);

void WriteParsedLogs(const std::string& path, std::span<const ParsedLog> logs);
std::vector<ParsedLog> ReadParsedLogs(const std::string& path);

void WriteJsonFile(const std::string& path, const nlohmann::json& j);
nlohmann::json ReadJsonFile(const std::string& path);
void WriteTextFile(const std::string& path, const std::string& text);

std::unique_ptr<Embedder> MakeEmbedder(const std::string& embeddings_path, int dim);

struct SplitView {
  std::vector<const GraphSnapshot*> train;  // normal windows only
  std::vector<const GraphSnapshot*> val;
  std::vector<const GraphSnapshot*> test;
};
SplitView SplitGraphs(std::span<const GraphSnapshot> graphs);

TrainResult TrainOnGraphs(std::span<const GraphSnapshot> graphs, const ModelConfig& model,
                          const TrainConfig& config, const EpochCallback& on_epoch = {});

// Edge protocol: threshold chosen on the validation split, metrics on the
// test split. Interval protocol: verdict score > R^2 on the test split.
// Each split is encoded from its own first window.
MetricsReport EvaluateEdges(const ModelParams& params, std::span<const GraphSnapshot> graphs,
                            double anomaly_prior);
MetricsReport EvaluateIntervals(const ModelParams& params, std::span<const GraphSnapshot> graphs);

struct PipelineOutcome {
  MetricsReport edge;
  MetricsReport interval;
  std::vector<std::string> reused;  // stages served from cache
};

using StageLogger = std::function<void(const std::string&)>;

// parse -> extract -> build-graphs -> train -> eval under config.work_dir.
// A stage is reused when its artifact exists and its recorded fingerprint
// matches, unless `force`. Stage failures are rethrown with the stage name.
PipelineOutcome RunPipeline(const PipelineConfig& config, bool force,
                            const StageLogger& log = {});

}  // namespace glad

#endif  // GLAD_PIPELINE_H_
