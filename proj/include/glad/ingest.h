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

#ifndef GLAD_INGEST_H_
#define GLAD_INGEST_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace glad {

enum class Label { kNormal, kAnomalous, kUnlabeled };

std::string_view LabelName(Label label);
// Accepts "normal", "anomaly"/"anomalous" and "unlabeled".
std::optional<Label> ParseLabel(std::string_view text);

struct LogRecord {
  std::string raw_text;
  int64_t timestamp_ms = 0;
  std::string source_id;
  Label label = Label::kUnlabeled;
};

struct LogWindow {
  int64_t window_index = 0;
  int64_t start_ms = 0;
  int64_t end_ms = 0;
  std::vector<LogRecord> records;
};

enum class InputFormat { kJsonl, kText };
enum class TimestampUnit { kEpochMs, kEpochSeconds, kRfc3339 };

struct IngestConfig {
  InputFormat format = InputFormat::kJsonl;

  // JSONL field names.
  std::string ts_field = "ts";
  std::string msg_field = "msg";
  std::string label_field = "label";
  std::string src_field = "src";

  // Plain-text mode. The pattern is anchored at line start and its first
  // capture group holds the timestamp; the message is the rest of the line.
  std::string text_pattern = R"(^(\d+)\s+)";
  TimestampUnit text_unit = TimestampUnit::kEpochMs;
  // Optional label capture inside the matched prefix (second group). A
  // capture equal to `normal_label` is normal, anything else anomalous.
  bool text_has_label = false;
  std::string normal_label = "-";

  // Abort on the first bad line instead of skipping it.
  bool strict = false;
};

struct IngestResult {
  std::vector<LogRecord> records;
  size_t rejected = 0;
};

// Timestamp parsing shared by both formats. Returns nullopt if unparsable.
std::optional<int64_t> ParseRfc3339Ms(std::string_view text);

// Reads and sorts records by timestamp (stable on file order).
// Throws DataError when the file is unreadable or, in strict mode, on the
// first rejected line.
IngestResult ReadLogs(const std::string& path, const IngestConfig& config);
IngestResult ParseLogLines(std::span<const std::string> lines,
                           const IngestConfig& config);

inline constexpr int64_t kDefaultWindowMs = 60000;

// Tumbling half-open windows [first + k*interval, first + (k+1)*interval).
// Empty windows between occupied ones are kept.
std::vector<LogWindow> WindowSegment(std::span<const LogRecord> records,
                                     int64_t interval_ms);

// Anomalous iff any record is anomalous; unlabeled counts as normal.
Label LabelWindow(const LogWindow& window);

}  // namespace glad

#endif  // GLAD_INGEST_H_
