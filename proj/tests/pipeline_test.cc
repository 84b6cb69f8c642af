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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "glad/common.h"

namespace glad {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A fresh directory holding a small synthetic corpus and a config that
// trains a tiny model for a few epochs.
class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::path(::testing::TempDir()) /
            ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(root_);
    fs::create_directories(root_);
    SynthConfig synth;
    synth.windows = 30;
    synth.rate = 0.1;
    synth.seed = 4;
    WriteSyntheticJsonl((root_ / "logs.jsonl").string(), GenerateSynthetic(synth));
    config_ = {{"input", "logs.jsonl"},
               {"work_dir", "work"},
               {"embed_dim", 16},
               {"model", {{"hidden_dim", 8}, {"attn_head_dim", 4}, {"ffn_dim", 8}}},
               {"train", {{"seed", 1}, {"epochs", 3}}}};
  }

  std::string WriteConfig(const nlohmann::json& j) {
    const fs::path path = root_ / "pipeline.json";
    WriteJsonFile(path.string(), j);
    return path.string();
  }

  fs::path root_;
  nlohmann::json config_;
};

TEST_F(PipelineTest, ConfigRoundTrip) {
  const PipelineConfig c = PipelineConfig::FromJson(config_);
  EXPECT_EQ(c.model.input_dim, 16);
  EXPECT_EQ(c.train.epochs, 3);
  const PipelineConfig back = PipelineConfig::FromJson(c.ToJson());
  EXPECT_EQ(back.ToJson(), c.ToJson());
}

TEST_F(PipelineTest, RejectsUnknownKeysAndMissingSeed) {
  nlohmann::json bad = config_;
  bad["epochs"] = 5;
  EXPECT_THROW(PipelineConfig::FromJson(bad), UsageError);
  bad = config_;
  bad["train"].erase("seed");
  EXPECT_THROW(PipelineConfig::FromJson(bad), UsageError);
  bad = config_;
  bad["train"]["lrr"] = 0.1;
  EXPECT_THROW(PipelineConfig::FromJson(bad), UsageError);
}

TEST_F(PipelineTest, ResolvesPathsAgainstConfigDirectory) {
  const PipelineConfig c = LoadPipelineConfig(WriteConfig(config_));
  EXPECT_EQ(fs::path(c.input), root_ / "logs.jsonl");
  EXPECT_EQ(fs::path(c.work_dir), root_ / "work");
}

TEST_F(PipelineTest, MissingRulesetIsUsageError) {
  config_["ruleset"] = "nope.json";
  const PipelineConfig c = LoadPipelineConfig(WriteConfig(config_));
  EXPECT_THROW(RunPipeline(c, false), UsageError);
}

TEST_F(PipelineTest, CachesStagesAndRerunsByteIdentically) {
  const PipelineConfig c = LoadPipelineConfig(WriteConfig(config_));
  const PipelineOutcome first = RunPipeline(c, false);
  EXPECT_TRUE(first.reused.empty());
  const fs::path work = root_ / "work";
  for (const char* name : {"parsed.jsonl", "templates.json", "extracted.jsonl", "model.bin",
                           "train_log.jsonl", "report_edge.json", "report_interval.json",
                           "stages.json"}) {
    EXPECT_TRUE(fs::exists(work / name)) << name;
  }
  const std::string log = Slurp(work / "train_log.jsonl");
  const std::string edge = Slurp(work / "report_edge.json");
  const std::string interval = Slurp(work / "report_interval.json");

  const PipelineOutcome second = RunPipeline(c, false);
  EXPECT_EQ(second.reused,
            (std::vector<std::string>{"parse", "extract", "build-graphs", "train", "eval"}));
  EXPECT_EQ(second.edge.ToJson(), first.edge.ToJson());

  const PipelineOutcome forced = RunPipeline(c, true);
  EXPECT_TRUE(forced.reused.empty());
  EXPECT_EQ(Slurp(work / "train_log.jsonl"), log);
  EXPECT_EQ(Slurp(work / "report_edge.json"), edge);
  EXPECT_EQ(Slurp(work / "report_interval.json"), interval);
}

TEST_F(PipelineTest, ChangedTrainConfigRetrainsOnly) {
  PipelineConfig c = LoadPipelineConfig(WriteConfig(config_));
  RunPipeline(c, false);
  c.train.epochs = 2;
  const PipelineOutcome again = RunPipeline(c, false);
  EXPECT_EQ(again.reused, (std::vector<std::string>{"parse", "extract", "build-graphs"}));
  std::ifstream log(fs::path(c.work_dir) / "train_log.jsonl");
  int lines = 0;
  for (std::string line; std::getline(log, line);) ++lines;
  EXPECT_EQ(lines, 2);
}

TEST_F(PipelineTest, EmptyInputIsDataError) {
  WriteTextFile((root_ / "logs.jsonl").string(), "");
  const PipelineConfig c = LoadPipelineConfig(WriteConfig(config_));
  EXPECT_THROW(RunPipeline(c, false), DataError);
}

}  // namespace
}  // namespace glad
