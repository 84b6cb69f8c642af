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

#include "glad/ingest.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <regex>

#include "glad/common.h"
#include "json.hpp"

namespace glad {
namespace {

using nlohmann::json;

bool ParseDigits(std::string_view text, size_t pos, size_t count, int* out) {
  if (pos + count > text.size()) return false;
  int value = 0;
  for (size_t i = pos; i < pos + count; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) return false;
    value = value * 10 + (text[i] - '0');
  }
  *out = value;
  return true;
}

std::optional<int64_t> ParseInteger(std::string_view text) {
  int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<int64_t> ConvertTimestamp(std::string_view text,
                                        TimestampUnit unit) {
  switch (unit) {
    case TimestampUnit::kEpochMs:
      return ParseInteger(text);
    case TimestampUnit::kEpochSeconds: {
      auto s = ParseInteger(text);
      if (!s) return std::nullopt;
      return *s * 1000;
    }
    case TimestampUnit::kRfc3339:
      return ParseRfc3339Ms(text);
  }
  return std::nullopt;
}

struct LineOutcome {
  std::optional<LogRecord> record;
  std::string error;
};

LineOutcome ParseJsonLine(const std::string& line, const IngestConfig& config) {
  json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded() || !obj.is_object()) return {std::nullopt, "invalid JSON"};
  LogRecord record;

  auto ts_it = obj.find(config.ts_field);
  if (ts_it == obj.end()) return {std::nullopt, "missing timestamp field"};
  std::optional<int64_t> ts;
  if (ts_it->is_number_integer()) {
    ts = ts_it->get<int64_t>();
  } else if (ts_it->is_string()) {
    const auto& s = ts_it->get_ref<const std::string&>();
    ts = ParseInteger(s);
    if (!ts) ts = ParseRfc3339Ms(s);
  }
  if (!ts || *ts < 0) return {std::nullopt, "unparsable timestamp"};
  record.timestamp_ms = *ts;

  auto msg_it = obj.find(config.msg_field);
  if (msg_it == obj.end() || !msg_it->is_string()) {
    return {std::nullopt, "missing message field"};
  }
  record.raw_text = Trim(msg_it->get_ref<const std::string&>());
  if (record.raw_text.empty()) return {std::nullopt, "empty message"};

  auto label_it = obj.find(config.label_field);
  if (label_it != obj.end() && !label_it->is_null()) {
    if (!label_it->is_string()) return {std::nullopt, "label is not a string"};
    auto label = ParseLabel(label_it->get_ref<const std::string&>());
    if (!label) return {std::nullopt, "unknown label"};
    record.label = *label;
  }
  auto src_it = obj.find(config.src_field);
  if (src_it != obj.end() && src_it->is_string()) {
    record.source_id = src_it->get<std::string>();
  }
  return {std::move(record), {}};
}

LineOutcome ParseTextLine(const std::string& line, const std::regex& pattern,
                          const IngestConfig& config) {
  std::smatch m;
  if (!std::regex_search(line, m, pattern,
                         std::regex_constants::match_continuous) ||
      m.size() < 2) {
    return {std::nullopt, "timestamp pattern did not match"};
  }
  auto ts = ConvertTimestamp(m[1].str(), config.text_unit);
  if (!ts || *ts < 0) return {std::nullopt, "unparsable timestamp"};
  LogRecord record;
  record.timestamp_ms = *ts;
  record.raw_text = Trim(std::string_view(line).substr(m.position(0) + m.length(0)));
  if (record.raw_text.empty()) return {std::nullopt, "empty message"};
  if (config.text_has_label) {
    if (m.size() < 3 || !m[2].matched) return {std::nullopt, "label capture missing"};
    record.label = m[2].str() == config.normal_label ? Label::kNormal
                                                     : Label::kAnomalous;
  }
  return {std::move(record), {}};
}

}  // namespace

std::string_view LabelName(Label label) {
  switch (label) {
    case Label::kNormal:
      return "normal";
    case Label::kAnomalous:
      return "anomaly";
    case Label::kUnlabeled:
      return "unlabeled";
  }
  return "unlabeled";
}

std::optional<Label> ParseLabel(std::string_view text) {
  if (text == "normal") return Label::kNormal;
  if (text == "anomaly" || text == "anomalous") return Label::kAnomalous;
  if (text == "unlabeled" || text.empty()) return Label::kUnlabeled;
  return std::nullopt;
}

std::optional<int64_t> ParseRfc3339Ms(std::string_view text) {
  // YYYY-MM-DD[T ]HH:MM:SS[.fraction](Z|+HH:MM|-HH:MM)
  int year, month, day, hour, minute, second;
  if (!ParseDigits(text, 0, 4, &year) || text.size() < 19 || text[4] != '-' ||
      !ParseDigits(text, 5, 2, &month) || text[7] != '-' ||
      !ParseDigits(text, 8, 2, &day) || (text[10] != 'T' && text[10] != 't' &&
                                         text[10] != ' ') ||
      !ParseDigits(text, 11, 2, &hour) || text[13] != ':' ||
      !ParseDigits(text, 14, 2, &minute) || text[16] != ':' ||
      !ParseDigits(text, 17, 2, &second)) {
    return std::nullopt;
  }
  size_t pos = 19;
  int64_t millis = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      if (digits < 3) millis = millis * 10 + (text[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
    for (int d = digits; d < 3; ++d) millis *= 10;
  }
  int64_t offset_minutes = 0;
  if (pos >= text.size()) return std::nullopt;
  if (text[pos] == 'Z' || text[pos] == 'z') {
    ++pos;
  } else if (text[pos] == '+' || text[pos] == '-') {
    int oh, om;
    if (!ParseDigits(text, pos + 1, 2, &oh) || pos + 3 >= text.size() ||
        text[pos + 3] != ':' || !ParseDigits(text, pos + 4, 2, &om)) {
      return std::nullopt;
    }
    offset_minutes = (text[pos] == '+' ? 1 : -1) * (oh * 60 + om);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != text.size()) return std::nullopt;
  if (month < 1 || month > 12 || hour > 23 || minute > 59 || second > 60) {
    return std::nullopt;
  }
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{unsigned(month)},
                           std::chrono::day{unsigned(day)}};
  if (!ymd.ok()) return std::nullopt;
  const int64_t days = sys_days{ymd}.time_since_epoch().count();
  const int64_t seconds = days * 86400 + hour * 3600 + minute * 60 + second -
                          offset_minutes * 60;
  return seconds * 1000 + millis;
}

IngestResult ParseLogLines(std::span<const std::string> lines,
                           const IngestConfig& config) {
  IngestResult result;
  std::optional<std::regex> pattern;
  if (config.format == InputFormat::kText) {
    try {
      pattern.emplace(config.text_pattern);
    } catch (const std::regex_error& e) {
      throw UsageError("invalid timestamp pattern: " + std::string(e.what()));
    }
  }
  size_t line_no = 0;
  for (const std::string& raw : lines) {
    ++line_no;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    LineOutcome outcome = config.format == InputFormat::kJsonl
                              ? ParseJsonLine(line, config)
                              : ParseTextLine(line, *pattern, config);
    if (!outcome.record) {
      if (config.strict) {
        throw DataError("line " + std::to_string(line_no) + ": " + outcome.error);
      }
      ++result.rejected;
      continue;
    }
    result.records.push_back(std::move(*outcome.record));
  }
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const LogRecord& a, const LogRecord& b) {
                     return a.timestamp_ms < b.timestamp_ms;
                   });
  return result;
}

IngestResult ReadLogs(const std::string& path, const IngestConfig& config) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read log file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(std::move(line));
  if (in.bad()) throw DataError("error while reading: " + path);
  return ParseLogLines(lines, config);
}

std::vector<LogWindow> WindowSegment(std::span<const LogRecord> records,
                                     int64_t interval_ms) {
  if (interval_ms <= 0) throw UsageError("window interval must be positive");
  std::vector<LogWindow> windows;
  if (records.empty()) return windows;
  const int64_t origin = records.front().timestamp_ms;
  for (const LogRecord& record : records) {
    if (record.timestamp_ms < origin) {
      throw UsageError("WindowSegment: records are not sorted by timestamp");
    }
    const int64_t k = (record.timestamp_ms - origin) / interval_ms;
    while (static_cast<int64_t>(windows.size()) <= k) {
      const int64_t index = static_cast<int64_t>(windows.size());
      windows.push_back(LogWindow{index, origin + index * interval_ms,
                                  origin + (index + 1) * interval_ms, {}});
    }
    if (k + 1 != static_cast<int64_t>(windows.size())) {
      throw UsageError("WindowSegment: records are not sorted by timestamp");
    }
    windows.back().records.push_back(record);
  }
  return windows;
}

Label LabelWindow(const LogWindow& window) {
  for (const LogRecord& record : window.records) {
    if (record.label == Label::kAnomalous) return Label::kAnomalous;
  }
  return Label::kNormal;
}

}  // namespace glad
