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

// glad: log relation anomaly detection from the command line.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <fmt/format.h>
#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "glad/common.h"
#include "glad/pipeline.h"

namespace {

using namespace glad;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

PromptTemplate ParsePromptName(const std::string& name) {
  if (name == "p1") return PromptTemplate::kP1;
  if (name == "p2") return PromptTemplate::kP2;
  throw UsageError("prompt template must be p1 or p2, got " + name);
}

std::vector<const GraphSnapshot*> Pointers(const std::vector<GraphSnapshot>& graphs) {
  std::vector<const GraphSnapshot*> out;
  for (const GraphSnapshot& g : graphs) out.push_back(&g);
  return out;
}

struct SynthArgs {
  SynthConfig config;
  std::string out;
};

struct ParseArgs {
  std::string input, out, templates, ingest_config, miner_config;
};

struct ExtractArgs {
  std::string parsed, out, ruleset, scorer, prompt = "p1";
};

struct PromptArgs {
  std::string parsed, out, prompt = "p1";
  int ratio = 3;
  uint64_t seed = 0;
};

struct GraphArgs {
  std::string parsed, templates, out, embeddings, miner_config;
  int64_t window_ms = kDefaultWindowMs;
  int dim = kDefaultEmbedDim;
};

struct TrainArgs {
  std::string graphs, config, model_config, out, log = "train_log.jsonl";
};

struct ScoreArgs {
  std::string model, graphs, protocol = "edge", out, split = "all";
};

struct EvalArgs {
  std::string model, graphs, protocol = "edge", out, table;
  double prior = 0.05;
};

struct PipelineArgs {
  std::string config;
  bool force = false;
};

int RunSynth(const SynthArgs& a) {
  const std::vector<LogRecord> records = GenerateSynthetic(a.config);
  WriteSyntheticJsonl(a.out, records);
  int64_t anomalous = 0;
  for (const LogRecord& r : records) anomalous += r.label == Label::kAnomalous ? 1 : 0;
  std::cout << fmt::format("wrote {} records ({} anomalous) to {}\n", records.size(), anomalous,
                           a.out);
  return 0;
}

int RunParse(const ParseArgs& a) {
  IngestConfig ingest;
  if (!a.ingest_config.empty()) ingest = IngestConfigFromJson(ReadJsonFile(a.ingest_config));
  MinerConfig miner;
  if (!a.miner_config.empty()) miner = MinerConfigFromJson(ReadJsonFile(a.miner_config));
  const IngestResult in = ReadLogs(a.input, ingest);
  if (in.records.empty()) throw DataError("no records in " + a.input);
  const ParseOutput parsed = ParseRecords(in.records, miner);
  WriteParsedLogs(a.out, parsed.logs);
  WriteJsonFile(a.templates, parsed.miner.ToJson());
  std::cout << fmt::format("{} records, {} rejected, {} templates\n", in.records.size(),
                           in.rejected, parsed.miner.cluster_count());
  return 0;
}

int RunExtract(const ExtractArgs& a) {
  std::vector<ParsedLog> logs = ReadParsedLogs(a.parsed);
  if (!a.scorer.empty()) {
    if (!a.ruleset.empty()) throw UsageError("--ruleset and --scorer are exclusive");
    const TableScorer scorer = TableScorer::FromJson(ReadJsonFile(a.scorer));
    ExtractFieldsWithScorer(logs, scorer, ParsePromptName(a.prompt));
  } else {
    ExtractFields(logs, a.ruleset.empty() ? Ruleset::Default() : Ruleset::FromFile(a.ruleset));
  }
  WriteParsedLogs(a.out, logs);
  size_t mentions = 0;
  for (const ParsedLog& log : logs) mentions += log.mentions.size();
  std::cout << fmt::format("{} logs, {} field mentions\n", logs.size(), mentions);
  return 0;
}

int RunPrompts(const PromptArgs& a) {
  if (a.ratio < 0) throw UsageError("--ratio must be >= 0");
  const std::vector<ParsedLog> logs = ReadParsedLogs(a.parsed);
  const std::vector<PromptPair> pairs =
      PromptPairsForLogs(logs, a.ratio, a.seed, ParsePromptName(a.prompt));
  std::string text;
  for (const PromptPair& p : pairs) text += PromptPairToJson(p).dump() + "\n";
  WriteTextFile(a.out, text);
  std::cout << fmt::format("{} prompt pairs\n", pairs.size());
  return 0;
}

int RunBuildGraphs(const GraphArgs& a) {
  MinerConfig miner;
  if (!a.miner_config.empty()) miner = MinerConfigFromJson(ReadJsonFile(a.miner_config));
  const std::vector<ParsedLog> logs = ReadParsedLogs(a.parsed);
  const TemplateMiner templates = TemplateMiner::FromJson(ReadJsonFile(a.templates), miner);
  const std::unique_ptr<Embedder> embedder = MakeEmbedder(a.embeddings, a.dim);
  const std::vector<GraphSnapshot> graphs =
      BuildSnapshots(logs, a.window_ms, TemplateTextsOf(templates), *embedder);
  std::filesystem::remove_all(a.out);
  WriteSnapshots(a.out, graphs);
  std::cout << fmt::format("{} snapshots written to {}\n", graphs.size(), a.out);
  return 0;
}

int RunTrain(const TrainArgs& a) {
  const TrainConfig config = TrainConfig::FromJson(ReadJsonFile(a.config));
  ModelConfig model;
  if (!a.model_config.empty()) model = ModelConfig::FromJson(ReadJsonFile(a.model_config));
  const std::vector<GraphSnapshot> graphs = ReadSnapshots(a.graphs);
  if (!graphs.empty()) model.input_dim = static_cast<int>(graphs.front().x.cols());
  std::ofstream log(a.log, std::ios::binary | std::ios::trunc);
  if (!log) throw DataError("cannot write " + a.log);
  const TrainResult result = TrainOnGraphs(graphs, model, config, [&](const EpochLog& e) {
    log << e.ToJson().dump() << '\n';
    log.flush();
  });
  SaveModel(a.out, result.params, {{"train", config.ToJson()}});
  const EpochLog& last = result.log.back();
  std::cout << fmt::format("trained {} epochs, final loss {:.6g}, R^2 {:.6g}\n", last.epoch,
                           last.loss, result.params.radius_sq);
  return 0;
}

std::vector<const GraphSnapshot*> SelectSplit(const std::vector<GraphSnapshot>& graphs,
                                              const std::string& split) {
  if (split == "all") return Pointers(graphs);
  const SplitView view = SplitGraphs(graphs);
  if (split == "train") return view.train;
  if (split == "val") return view.val;
  if (split == "test") return view.test;
  throw UsageError("--split must be all, train, val or test");
}

int RunScore(const ScoreArgs& a) {
  const ModelParams params = LoadModel(a.model);
  const std::vector<GraphSnapshot> graphs = ReadSnapshots(a.graphs);
  const std::vector<const GraphSnapshot*> chosen = SelectSplit(graphs, a.split);
  std::string text;
  if (a.protocol == "edge") {
    for (const ScoredEdge& s : ScoreEdges(params, chosen)) {
      const Edge& e = graphs[static_cast<size_t>(s.t)].edges[s.edge];
      text += nlohmann::json({{"t", s.t},
                              {"edge", s.edge},
                              {"i", e.i},
                              {"j", e.j},
                              {"w", e.w},
                              {"score", s.score},
                              {"label", LabelName(s.label)}})
                  .dump() +
              "\n";
    }
  } else if (a.protocol == "interval") {
    for (const ScoredWindow& w : ScoreIntervals(params, chosen)) {
      text += nlohmann::json({{"t", w.t},
                              {"score", w.skipped ? nlohmann::json(nullptr) : nlohmann::json(w.score)},
                              {"verdict", !w.skipped && w.score > params.radius_sq ? "anomaly" : "normal"},
                              {"label", LabelName(w.label)}})
                  .dump() +
              "\n";
    }
  } else {
    throw UsageError("--protocol must be edge or interval");
  }
  if (a.out.empty()) {
    std::cout << text;
  } else {
    WriteTextFile(a.out, text);
  }
  return 0;
}

int RunEval(const EvalArgs& a) {
  const ModelParams params = LoadModel(a.model);
  const std::vector<GraphSnapshot> graphs = ReadSnapshots(a.graphs);
  MetricsReport report;
  if (a.protocol == "edge") {
    report = EvaluateEdges(params, graphs, a.prior);
  } else if (a.protocol == "interval") {
    report = EvaluateIntervals(params, graphs);
  } else {
    throw UsageError("--protocol must be edge or interval");
  }
  if (!a.out.empty()) WriteJsonFile(a.out, report.ToJson());
  if (!a.table.empty()) WriteTextFile(a.table, report.ToTable());
  std::cout << report.ToTable();
  return 0;
}

int RunPipelineCommand(const PipelineArgs& a) {
  const PipelineConfig config = LoadPipelineConfig(a.config);
  const PipelineOutcome outcome =
      RunPipeline(config, a.force, [](const std::string& msg) { std::cerr << msg << '\n'; });
  std::cout << outcome.edge.ToTable() << '\n' << outcome.interval.ToTable();
  return 0;
}

int RunConfigValidate(const std::string& path, const std::string& kind) {
  if (kind == "pipeline") {
    LoadPipelineConfig(path).Validate();
  } else if (kind == "train") {
    TrainConfig::FromJson(ReadJsonFile(path));
  } else if (kind == "model") {
    ModelConfig::FromJson(ReadJsonFile(path));
  } else {
    throw UsageError("--kind must be pipeline, train or model");
  }
  std::cout << path << ": ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training reallocates the same large buffers every epoch; keep them off mmap.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  CLI::App app{"glad: log relation anomaly detection"};
  app.require_subcommand(1);
  std::function<int()> action;

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic log corpus");
  synth_cmd->add_option("--windows", synth.config.windows, "Number of windows")->capture_default_str();
  synth_cmd->add_option("--rate", synth.config.rate, "Fraction of anomalous windows")->capture_default_str();
  synth_cmd->add_option("--seed", synth.config.seed, "Random seed")->required();
  synth_cmd->add_option("--workers", synth.config.workers)->capture_default_str();
  synth_cmd->add_option("--users", synth.config.users)->capture_default_str();
  synth_cmd->add_option("--buyers", synth.config.buyers)->capture_default_str();
  synth_cmd->add_option("--dispatches", synth.config.dispatch_per_worker, "Requests per worker per window")
      ->capture_default_str();
  synth_cmd->add_option("--window-ms", synth.config.window_ms)->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output JSONL")->required();
  synth_cmd->callback([&] { action = [&] { return RunSynth(synth); }; });

  ParseArgs parse;
  auto* parse_cmd = app.add_subcommand("parse", "Ingest logs and mine event templates");
  parse_cmd->add_option("--input", parse.input, "Log file (JSONL or text)")->required();
  parse_cmd->add_option("--out", parse.out, "Parsed logs JSONL")->required();
  parse_cmd->add_option("--templates", parse.templates, "Template store JSON")->required();
  parse_cmd->add_option("--ingest-config", parse.ingest_config, "Ingest settings JSON");
  parse_cmd->add_option("--miner-config", parse.miner_config, "Miner settings JSON");
  parse_cmd->callback([&] { action = [&] { return RunParse(parse); }; });

  ExtractArgs extract;
  auto* extract_cmd = app.add_subcommand("extract", "Extract typed field mentions");
  extract_cmd->add_option("--parsed", extract.parsed, "Parsed logs JSONL")->required();
  extract_cmd->add_option("--out", extract.out, "Output JSONL")->required();
  extract_cmd->add_option("--ruleset", extract.ruleset, "Ruleset JSON (default: built-in)");
  extract_cmd->add_option("--scorer", extract.scorer, "Prompt score table JSON");
  extract_cmd->add_option("--prompt", extract.prompt, "p1 or p2")->capture_default_str();
  extract_cmd->callback([&] { action = [&] { return RunExtract(extract); }; });

  PromptArgs prompts;
  auto* prompts_cmd = app.add_subcommand("gen-prompts", "Emit prompt training pairs");
  prompts_cmd->add_option("--parsed", prompts.parsed, "Extracted logs JSONL")->required();
  prompts_cmd->add_option("--out", prompts.out, "Output JSONL")->required();
  prompts_cmd->add_option("--ratio", prompts.ratio, "Negatives per positive")->capture_default_str();
  prompts_cmd->add_option("--seed", prompts.seed, "Random seed")->required();
  prompts_cmd->add_option("--prompt", prompts.prompt, "p1 or p2")->capture_default_str();
  prompts_cmd->callback([&] { action = [&] { return RunPrompts(prompts); }; });

  GraphArgs graphs;
  auto* graphs_cmd = app.add_subcommand("build-graphs", "Build per-window snapshots");
  graphs_cmd->add_option("--parsed", graphs.parsed, "Extracted logs JSONL")->required();
  graphs_cmd->add_option("--templates", graphs.templates, "Template store JSON")->required();
  graphs_cmd->add_option("--out", graphs.out, "Output directory")->required();
  graphs_cmd->add_option("--window-ms", graphs.window_ms)->capture_default_str();
  graphs_cmd->add_option("--embeddings", graphs.embeddings, "Precomputed node vectors (TSV)");
  graphs_cmd->add_option("--dim", graphs.dim, "Attribute dimension")->capture_default_str();
  graphs_cmd->add_option("--miner-config", graphs.miner_config, "Miner settings JSON");
  graphs_cmd->callback([&] { action = [&] { return RunBuildGraphs(graphs); }; });

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train on the normal windows of the train split");
  train_cmd->add_option("--graphs", train.graphs, "Snapshot directory")->required();
  train_cmd->add_option("--config", train.config, "Train config JSON")->required();
  train_cmd->add_option("--model-config", train.model_config, "Model config JSON");
  train_cmd->add_option("--out", train.out, "Model file")->required();
  train_cmd->add_option("--log", train.log, "Per-epoch JSONL log")->capture_default_str();
  train_cmd->callback([&] { action = [&] { return RunTrain(train); }; });

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score edges or windows");
  score_cmd->add_option("--model", score.model)->required();
  score_cmd->add_option("--graphs", score.graphs)->required();
  score_cmd->add_option("--protocol", score.protocol, "edge or interval")->capture_default_str();
  score_cmd->add_option("--split", score.split, "all, train, val or test")->capture_default_str();
  score_cmd->add_option("--out", score.out, "Output JSONL (default: stdout)");
  score_cmd->callback([&] { action = [&] { return RunScore(score); }; });

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate on the test split");
  eval_cmd->add_option("--model", eval.model)->required();
  eval_cmd->add_option("--graphs", eval.graphs)->required();
  eval_cmd->add_option("--protocol", eval.protocol, "edge or interval")->capture_default_str();
  eval_cmd->add_option("--prior", eval.prior, "Anomaly prior for the threshold fallback")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Report JSON");
  eval_cmd->add_option("--table", eval.table, "Report text table");
  eval_cmd->callback([&] { action = [&] { return RunEval(eval); }; });

  PipelineArgs pipeline;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "Run every stage from a config file");
  pipeline_cmd->add_option("--config", pipeline.config, "Pipeline config JSON")->required();
  pipeline_cmd->add_flag("--force", pipeline.force, "Ignore cached artifacts");
  pipeline_cmd->callback([&] { action = [&] { return RunPipelineCommand(pipeline); }; });

  std::string validate_path;
  std::string validate_kind = "pipeline";
  auto* config_cmd = app.add_subcommand("config", "Configuration utilities");
  config_cmd->require_subcommand(1);
  auto* validate_cmd = config_cmd->add_subcommand("validate", "Check a config file");
  validate_cmd->add_option("--config", validate_path, "Config file")->required();
  validate_cmd->add_option("--kind", validate_kind, "pipeline, train or model")
      ->capture_default_str();
  validate_cmd->callback(
      [&] { action = [&] { return RunConfigValidate(validate_path, validate_kind); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
}
