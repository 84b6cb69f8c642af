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

// Typed field mentions in log messages: a rule backend, the span
// enumeration + prompt argmax procedure over a pluggable scorer, and
// prompt-pair generation for training an external scorer.

#ifndef GLAD_FIELD_EXTRACT_H_
#define GLAD_FIELD_EXTRACT_H_

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "glad/ingest.h"
#include "json.hpp"

namespace glad {

enum class FieldType {
  kIp,
  kEmail,
  kPid,
  kUid,
  kUserName,
  kTimestamp,
  kService,
  kServer,
  kFilePath,
  kUrl,
  kPort,
  kSession,
  kDuration,
  kDomain,
  kVersion,
};

inline constexpr size_t kFieldTypeCount = 15;
extern const std::array<FieldType, kFieldTypeCount> kAllFieldTypes;

// Identifier form, e.g. "user_name".
std::string_view FieldTypeName(FieldType type);
// Form used inside prompts, e.g. "user name".
std::string FieldTypeDisplay(FieldType type);
std::optional<FieldType> ParseFieldType(std::string_view name);

// Token of a message with its byte range in the original text. Tokens are
// whitespace separated and additionally split at = , ; quotes and
// brackets; trailing ':' and '.' are dropped.
struct Token {
  std::string text;
  size_t begin = 0;
  size_t end = 0;
};
std::vector<Token> FieldTokens(std::string_view message);

// Half-open token range.
struct Span {
  size_t start = 0;
  size_t end = 0;

  size_t length() const { return end - start; }
  bool Overlaps(const Span& other) const {
    return start < other.end && other.start < end;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

inline constexpr size_t kMaxSpanTokens = 5;

// Spans of length 1..max_n ordered by length, then by start.
std::vector<Span> EnumerateSpans(size_t token_count, size_t max_n = kMaxSpanTokens);

std::string SpanText(const std::vector<Token>& tokens, const Span& span);

struct FieldMention {
  Span span;
  std::string text;
  FieldType field_type = FieldType::kIp;
  // Summed log-probability for scorer hits; +inf for rule hits.
  double score = 0.0;
  bool rule_hit = false;
};

enum class PromptTemplate { kP1, kP2 };
enum class Polarity { kPositive, kNegative };

// P1: "<span> is a/an <type> entity" / "<span> is not a named entity".
// P2: "<type> = <span>" / "<span> = none".
// Throws UsageError for a positive prompt without a field type.
std::string BuildPrompt(std::string_view text, std::optional<FieldType> type,
                        PromptTemplate tmpl, Polarity polarity);

struct PromptPair {
  std::string message;
  std::string prompt;
  Polarity polarity = Polarity::kNegative;
  Span span;
  std::optional<FieldType> field_type;
};

struct GoldMention {
  Span span;
  FieldType field_type = FieldType::kIp;
};

// One positive pair per gold mention plus ratio x positives negatives drawn
// uniformly without replacement from non-gold spans (capped by supply).
std::vector<PromptPair> GenerateTrainingPairs(
    std::string_view message, const std::vector<GoldMention>& gold, int ratio,
    uint64_t seed, PromptTemplate tmpl = PromptTemplate::kP1);

class Ruleset {
 public:
  struct Rule {
    FieldType type;
    std::string source;
    std::regex pattern;
  };

  // Throws DataError on an unknown type name or an invalid pattern.
  static Ruleset FromJson(const nlohmann::json& j);
  static Ruleset FromFile(const std::string& path);
  static Ruleset Default();

  nlohmann::json ToJson() const;
  const std::vector<Rule>& rules() const { return rules_; }

 private:
  void Add(FieldType type, const std::string& pattern);
  std::vector<Rule> rules_;
};

// Regex hits are mapped to whole tokens (the first capture group if the
// pattern has one). Overlaps resolve by longest, then leftmost, then field
// type declaration order. Output is ordered by span start.
std::vector<FieldMention> ExtractRules(std::string_view message,
                                       const Ruleset& ruleset);

// Log-probability of `prompt` given `message`.
using PromptScorer =
    std::function<double(std::string_view message, std::string_view prompt)>;

// Argmax over the 15 positive prompts and the negative prompt per span.
// Overlaps resolve by higher winning score, then longest, then leftmost.
// Scorer exceptions are rethrown as DataError carrying the span.
std::vector<FieldMention> ExtractWithScorer(
    std::string_view message, const PromptScorer& scorer,
    PromptTemplate tmpl = PromptTemplate::kP1);

// Lookup-table scorer used for tests and offline score dumps. Prompts not in
// the table score `negative_default` when they are negative prompts and
// `positive_default` otherwise.
class TableScorer {
 public:
  TableScorer(std::map<std::string, double, std::less<>> table,
              double positive_default, double negative_default)
      : table_(std::move(table)),
        positive_default_(positive_default),
        negative_default_(negative_default) {}

  static TableScorer FromJson(const nlohmann::json& j);

  double operator()(std::string_view message, std::string_view prompt) const;

 private:
  std::map<std::string, double, std::less<>> table_;
  double positive_default_;
  double negative_default_;
};

struct ParsedLog {
  size_t record_index = 0;
  LogRecord record;
  std::string template_id;
  std::vector<FieldMention> mentions;
};

nlohmann::json MentionToJson(const FieldMention& mention);
FieldMention MentionFromJson(const nlohmann::json& j);
nlohmann::json ParsedLogToJson(const ParsedLog& log);
ParsedLog ParsedLogFromJson(const nlohmann::json& j);

}  // namespace glad

#endif  // GLAD_FIELD_EXTRACT_H_
