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

#include "glad/pipeline.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "glad/common.h"

namespace glad {

namespace fs = std::filesystem;

namespace {

std::string_view FormatName(InputFormat f) { return f == InputFormat::kJsonl ? "jsonl" : "text"; }

std::string_view UnitName(TimestampUnit u) {
  switch (u) {
    case TimestampUnit::kEpochMs:
      return "ms";
    case TimestampUnit::kEpochSeconds:
      return "s";
    case TimestampUnit::kRfc3339:
      return "rfc3339";
  }
  return "ms";
}

void RejectUnknownKeys(const nlohmann::json& j, const std::set<std::string>& keys,
                       const std::string& where) {
  if (!j.is_object()) throw UsageError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!keys.contains(key)) throw UsageError("unknown key in " + where + ": " + key);
  }
}

std::string Hex(uint64_t v) { return fmt::format("{:016x}", v); }

std::string FileDigest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return Hex(Fnv1a64(buf.str()));
}

std::string Chain(const std::string& upstream, const nlohmann::json& stage_config) {
  return Hex(Fnv1a64(upstream + "|" + stage_config.dump()));
}

template <typename Fn>
auto RunStage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const UsageError& e) {
    throw UsageError("stage " + stage + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError("stage " + stage + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError("stage " + stage + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("stage " + stage + ": " + e.what());
  }
}

}  // namespace

nlohmann::json IngestConfigToJson(const IngestConfig& c) {
  return {{"format", FormatName(c.format)},   {"ts_field", c.ts_field},
          {"msg_field", c.msg_field},         {"label_field", c.label_field},
          {"src_field", c.src_field},         {"text_pattern", c.text_pattern},
          {"text_unit", UnitName(c.text_unit)}, {"text_has_label", c.text_has_label},
          {"normal_label", c.normal_label},   {"strict", c.strict}};
}

IngestConfig IngestConfigFromJson(const nlohmann::json& j) {
  RejectUnknownKeys(j,
                    {"format", "ts_field", "msg_field", "label_field", "src_field", "text_pattern",
                     "text_unit", "text_has_label", "normal_label", "strict"},
                    "ingest config");
  IngestConfig c;
  const std::string format = j.value("format", "jsonl");
  if (format == "jsonl") {
    c.format = InputFormat::kJsonl;
  } else if (format == "text") {
    c.format = InputFormat::kText;
  } else {
    throw UsageError("ingest format must be jsonl or text, got " + format);
  }
  c.ts_field = j.value("ts_field", c.ts_field);
  c.msg_field = j.value("msg_field", c.msg_field);
  c.label_field = j.value("label_field", c.label_field);
  c.src_field = j.value("src_field", c.src_field);
  c.text_pattern = j.value("text_pattern", c.text_pattern);
  const std::string unit = j.value("text_unit", "ms");
  if (unit == "ms") {
    c.text_unit = TimestampUnit::kEpochMs;
  } else if (unit == "s") {
    c.text_unit = TimestampUnit::kEpochSeconds;
  } else if (unit == "rfc3339") {
    c.text_unit = TimestampUnit::kRfc3339;
  } else {
    throw UsageError("text_unit must be ms, s or rfc3339, got " + unit);
  }
  c.text_has_label = j.value("text_has_label", c.text_has_label);
  c.normal_label = j.value("normal_label", c.normal_label);
  c.strict = j.value("strict", c.strict);
  return c;
}

nlohmann::json MinerConfigToJson(const MinerConfig& c) {
  return {{"depth", c.depth},
          {"similarity_threshold", c.similarity_threshold},
          {"max_children", c.max_children}};
}

MinerConfig MinerConfigFromJson(const nlohmann::json& j) {
  RejectUnknownKeys(j, {"depth", "similarity_threshold", "max_children"}, "miner config");
  MinerConfig c;
  c.depth = j.value("depth", c.depth);
  c.similarity_threshold = j.value("similarity_threshold", c.similarity_threshold);
  c.max_children = j.value("max_children", c.max_children);
  if (c.depth < 3 || c.max_children < 1 || c.similarity_threshold < 0.0 ||
      c.similarity_threshold > 1.0) {
    throw UsageError("miner config: depth >= 3, max_children >= 1, threshold in [0, 1]");
  }
  return c;
}

nlohmann::json PipelineConfig::ToJson() const {
  return {{"input", input},
          {"work_dir", work_dir},
          {"ruleset", ruleset},
          {"embeddings", embeddings},
          {"ingest", IngestConfigToJson(ingest)},
          {"window_ms", window_ms},
          {"miner", MinerConfigToJson(miner)},
          {"embed_dim", embed_dim},
          {"model", model.ToJson()},
          {"train", train.ToJson()},
          {"anomaly_prior", anomaly_prior}};
}

PipelineConfig PipelineConfig::FromJson(const nlohmann::json& j) {
  RejectUnknownKeys(j,
                    {"input", "work_dir", "ruleset", "embeddings", "ingest", "window_ms", "miner",
                     "embed_dim", "model", "train", "anomaly_prior"},
                    "pipeline config");
  if (!j.contains("train")) throw UsageError("pipeline config: train section with a seed is required");
  PipelineConfig c;
  try {
    c.input = j.at("input").get<std::string>();
    c.work_dir = j.at("work_dir").get<std::string>();
    c.ruleset = j.value("ruleset", "");
    c.embeddings = j.value("embeddings", "");
    c.ingest = IngestConfigFromJson(j.value("ingest", nlohmann::json::object()));
    c.window_ms = j.value("window_ms", c.window_ms);
    c.miner = MinerConfigFromJson(j.value("miner", nlohmann::json::object()));
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.model = ModelConfig::FromJson(j.value("model", nlohmann::json::object()));
    c.train = TrainConfig::FromJson(j.at("train"));
    c.anomaly_prior = j.value("anomaly_prior", c.anomaly_prior);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("pipeline config: ") + e.what());
  }
  if (c.window_ms <= 0) throw UsageError("pipeline config: window_ms must be positive");
  if (c.embed_dim < 8) throw UsageError("pipeline config: embed_dim must be >= 8");
  if (!(c.anomaly_prior > 0.0 && c.anomaly_prior < 1.0)) {
    throw UsageError("pipeline config: anomaly_prior must lie in (0, 1)");
  }
  c.model.input_dim = c.embed_dim;
  return c;
}

void PipelineConfig::Validate() const {
  if (input.empty() || !fs::is_regular_file(input)) {
    throw UsageError("input file not found: " + input);
  }
  if (work_dir.empty()) throw UsageError("work_dir must be set");
  if (!ruleset.empty() && !fs::is_regular_file(ruleset)) {
    throw UsageError("ruleset file not found: " + ruleset);
  }
  if (!embeddings.empty() && !fs::is_regular_file(embeddings)) {
    throw UsageError("embeddings file not found: " + embeddings);
  }
  train.Validate();
}

PipelineConfig LoadPipelineConfig(const std::string& path) {
  nlohmann::json j;
  try {
    j = ReadJsonFile(path);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  PipelineConfig c = PipelineConfig::FromJson(j);
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(c.input);
  resolve(c.work_dir);
  resolve(c.ruleset);
  resolve(c.embeddings);
  return c;
}

ParseOutput ParseRecords(std::span<const LogRecord> records, const MinerConfig& config) {
  ParseOutput out{{}, TemplateMiner(config)};
  std::vector<size_t> clusters;
  clusters.reserve(records.size());
  for (const LogRecord& r : records) clusters.push_back(out.miner.Parse(r.raw_text).cluster);
  out.logs.reserve(records.size());
  for (size_t k = 0; k < records.size(); ++k) {
    ParsedLog log;
    log.record_index = k;
    log.record = records[k];
    log.template_id = out.miner.Cluster(clusters[k]).template_id;
    out.logs.push_back(std::move(log));
  }
  return out;
}

void ExtractFields(std::span<ParsedLog> logs, const Ruleset& ruleset) {
  for (ParsedLog& log : logs) log.mentions = ExtractRules(log.record.raw_text, ruleset);
}

void ExtractFieldsWithScorer(std::span<ParsedLog> logs, const PromptScorer& scorer,
                             PromptTemplate tmpl) {
  for (ParsedLog& log : logs) log.mentions = ExtractWithScorer(log.record.raw_text, scorer, tmpl);
}

std::vector<PromptPair> PromptPairsForLogs(std::span<const ParsedLog> logs, int ratio,
                                           uint64_t seed, PromptTemplate tmpl) {
  std::vector<PromptPair> out;
  for (const ParsedLog& log : logs) {
    std::vector<GoldMention> gold;
    for (const FieldMention& m : log.mentions) gold.push_back({m.span, m.field_type});
    // Per-record seeds keep the pairs of one log independent of the others.
    const uint64_t record_seed = Fnv1a64(std::to_string(log.record_index), seed);
    std::vector<PromptPair> pairs =
        GenerateTrainingPairs(log.record.raw_text, gold, ratio, record_seed, tmpl);
    out.insert(out.end(), std::make_move_iterator(pairs.begin()),
               std::make_move_iterator(pairs.end()));
  }
  return out;
}

nlohmann::json PromptPairToJson(const PromptPair& p) {
  return {{"message", p.message},
          {"prompt", p.prompt},
          {"polarity", p.polarity == Polarity::kPositive ? "positive" : "negative"},
          {"start", p.span.start},
          {"end", p.span.end},
          {"type", p.field_type ? nlohmann::json(std::string(FieldTypeName(*p.field_type)))
                                : nlohmann::json(nullptr)}};
}

TemplateTexts TemplateTextsOf(const TemplateMiner& miner) {
  TemplateTexts out;
  for (const EventTemplate& t : miner.templates()) out[t.template_id] = t.Text();
  return out;
}

void WriteParsedLogs(const std::string& path, std::span<const ParsedLog> logs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const ParsedLog& log : logs) out << ParsedLogToJson(log).dump() << '\n';
  if (!out) throw DataError("error while writing " + path);
}

std::vector<ParsedLog> ReadParsedLogs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::vector<ParsedLog> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError(fmt::format("{}:{}: invalid JSON", path, line_no));
    try {
      out.push_back(ParsedLogFromJson(j));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(fmt::format("{}:{}: {}", path, line_no, e.what()));
    }
  }
  return out;
}

void WriteJsonFile(const std::string& path, const nlohmann::json& j) {
  WriteTextFile(path, j.dump(2) + "\n");
}

nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("invalid JSON in " + path);
  return j;
}

void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("error while writing " + path);
}

std::unique_ptr<Embedder> MakeEmbedder(const std::string& embeddings_path, int dim) {
  if (embeddings_path.empty()) return std::make_unique<HashEmbedder>(dim);
  return std::make_unique<TableEmbedder>(LoadEmbeddings(embeddings_path, dim), dim);
}

SplitView SplitGraphs(std::span<const GraphSnapshot> graphs) {
  const SplitRanges r = SplitSequences(graphs.size());
  SplitView v;
  for (size_t t = 0; t < graphs.size(); ++t) {
    if (t < r.train_end) {
      if (graphs[t].window_label != Label::kAnomalous) v.train.push_back(&graphs[t]);
    } else if (t < r.val_end) {
      v.val.push_back(&graphs[t]);
    } else {
      v.test.push_back(&graphs[t]);
    }
  }
  return v;
}

TrainResult TrainOnGraphs(std::span<const GraphSnapshot> graphs, const ModelConfig& model,
                          const TrainConfig& config, const EpochCallback& on_epoch) {
  const SplitView split = SplitGraphs(graphs);
  return Train(split.train, split.val, model, config, on_epoch);
}

MetricsReport EvaluateEdges(const ModelParams& params, std::span<const GraphSnapshot> graphs,
                            double anomaly_prior) {
  const SplitView split = SplitGraphs(graphs);
  const std::vector<ScoredItem> val = EdgeItems(ScoreEdges(params, split.val));
  const std::vector<ScoredItem> test = EdgeItems(ScoreEdges(params, split.test));
  if (val.empty()) throw DataError("validation split has no edges");
  if (test.empty()) throw DataError("test split has no edges");
  const ThresholdChoice choice = ChooseThreshold(val, anomaly_prior);
  MetricsReport report = ComputeMetrics("edge", test, choice.threshold);
  report.threshold_fallback = choice.fallback;
  return report;
}

MetricsReport EvaluateIntervals(const ModelParams& params,
                                std::span<const GraphSnapshot> graphs) {
  const SplitView split = SplitGraphs(graphs);
  const std::vector<ScoredItem> test = WindowItems(ScoreIntervals(params, split.test));
  if (test.empty()) throw DataError("test split has no non-empty windows");
  return ComputeMetrics("interval", test, params.radius_sq, /*strict=*/true);
}

PipelineOutcome RunPipeline(const PipelineConfig& config, bool force, const StageLogger& log) {
  config.Validate();
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };
  const fs::path dir(config.work_dir);
  fs::create_directories(dir);
  const std::string stages_path = (dir / "stages.json").string();
  nlohmann::json stages = nlohmann::json::object();
  if (!force && fs::is_regular_file(stages_path)) {
    stages = ReadJsonFile(stages_path);
    if (!stages.is_object()) stages = nlohmann::json::object();
  }
  PipelineOutcome outcome;
  auto cached = [&](const std::string& stage, const std::string& fp,
                    std::initializer_list<fs::path> artifacts) {
    if (force || stages.value(stage, "") != fp) return false;
    for (const fs::path& a : artifacts) {
      if (!fs::exists(a)) return false;
    }
    outcome.reused.push_back(stage);
    say("stage " + stage + ": reusing cached artifacts");
    return true;
  };
  auto record = [&](const std::string& stage, const std::string& fp) {
    stages[stage] = fp;
    WriteJsonFile(stages_path, stages);
  };

  const fs::path parsed_path = dir / "parsed.jsonl";
  const fs::path templates_path = dir / "templates.json";
  const fs::path extracted_path = dir / "extracted.jsonl";
  const fs::path graphs_dir = dir / "graphs";
  const fs::path model_path = dir / "model.bin";
  const fs::path train_log_path = dir / "train_log.jsonl";

  // parse
  const std::string parse_fp =
      Chain(FileDigest(config.input), {IngestConfigToJson(config.ingest),
                                       MinerConfigToJson(config.miner)});
  if (!cached("parse", parse_fp, {parsed_path, templates_path})) {
    RunStage("parse", [&] {
      say("stage parse");
      const IngestResult ingest = ReadLogs(config.input, config.ingest);
      if (ingest.records.empty()) throw DataError("no records in " + config.input);
      ParseOutput parsed = ParseRecords(ingest.records, config.miner);
      WriteParsedLogs(parsed_path.string(), parsed.logs);
      WriteJsonFile(templates_path.string(), parsed.miner.ToJson());
    });
    record("parse", parse_fp);
  }

  // extract
  const std::string ruleset_digest = config.ruleset.empty() ? "default" : FileDigest(config.ruleset);
  const std::string extract_fp = Chain(parse_fp, {ruleset_digest});
  if (!cached("extract", extract_fp, {extracted_path})) {
    RunStage("extract", [&] {
      say("stage extract");
      const Ruleset rules =
          config.ruleset.empty() ? Ruleset::Default() : Ruleset::FromFile(config.ruleset);
      std::vector<ParsedLog> logs = ReadParsedLogs(parsed_path.string());
      ExtractFields(logs, rules);
      WriteParsedLogs(extracted_path.string(), logs);
    });
    record("extract", extract_fp);
  }

  // build-graphs
  const std::string embed_digest =
      config.embeddings.empty() ? "hash" : FileDigest(config.embeddings);
  const std::string graphs_fp =
      Chain(extract_fp, {config.window_ms, config.embed_dim, embed_digest});
  if (!cached("build-graphs", graphs_fp, {graphs_dir / "index.json"})) {
    RunStage("build-graphs", [&] {
      say("stage build-graphs");
      const std::vector<ParsedLog> logs = ReadParsedLogs(extracted_path.string());
      const TemplateMiner miner =
          TemplateMiner::FromJson(ReadJsonFile(templates_path.string()), config.miner);
      const std::unique_ptr<Embedder> embedder = MakeEmbedder(config.embeddings, config.embed_dim);
      const std::vector<GraphSnapshot> graphs =
          BuildSnapshots(logs, config.window_ms, TemplateTextsOf(miner), *embedder);
      fs::remove_all(graphs_dir);
      WriteSnapshots(graphs_dir.string(), graphs);
    });
    record("build-graphs", graphs_fp);
  }

  const std::vector<GraphSnapshot> graphs =
      RunStage("load-graphs", [&] { return ReadSnapshots(graphs_dir.string()); });

  // train
  const std::string train_fp = Chain(graphs_fp, {config.model.ToJson(), config.train.ToJson()});
  if (!cached("train", train_fp, {model_path, train_log_path})) {
    RunStage("train", [&] {
      say("stage train");
      std::ofstream train_log(train_log_path, std::ios::binary | std::ios::trunc);
      if (!train_log) throw DataError("cannot write " + train_log_path.string());
      const TrainResult result =
          TrainOnGraphs(graphs, config.model, config.train, [&](const EpochLog& e) {
            train_log << e.ToJson().dump() << '\n';
            train_log.flush();
          });
      nlohmann::json fingerprint = {{"train", config.train.ToJson()},
                                    {"graphs", graphs_fp}};
      SaveModel(model_path.string(), result.params, fingerprint);
    });
    record("train", train_fp);
  }

  // eval
  const std::string eval_fp = Chain(train_fp, {config.anomaly_prior});
  const fs::path edge_json = dir / "report_edge.json";
  const fs::path interval_json = dir / "report_interval.json";
  if (cached("eval", eval_fp, {edge_json, interval_json})) {
    outcome.edge = MetricsReport::FromJson(ReadJsonFile(edge_json.string()));
    outcome.interval = MetricsReport::FromJson(ReadJsonFile(interval_json.string()));
    return outcome;
  }
  RunStage("eval", [&] {
    say("stage eval");
    const ModelParams params = LoadModel(model_path.string());
    outcome.edge = EvaluateEdges(params, graphs, config.anomaly_prior);
    outcome.interval = EvaluateIntervals(params, graphs);
    WriteJsonFile(edge_json.string(), outcome.edge.ToJson());
    WriteTextFile((dir / "report_edge.txt").string(), outcome.edge.ToTable());
    WriteJsonFile(interval_json.string(), outcome.interval.ToJson());
    WriteTextFile((dir / "report_interval.txt").string(), outcome.interval.ToTable());
  });
  record("eval", eval_fp);
  return outcome;
}

}  // namespace glad
