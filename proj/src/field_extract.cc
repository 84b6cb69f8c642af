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

#include "glad/field_extract.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "glad/common.h"

namespace glad {
namespace {

constexpr std::array<std::string_view, kFieldTypeCount> kFieldTypeNames = {
    "ip",       "email",   "pid",      "uid",  "user_name",
    "timestamp", "service", "server",  "file_path", "url",
    "port",     "session", "duration", "domain",    "version"};

constexpr std::string_view kP1NegativeSuffix = " is not a named entity";
constexpr std::string_view kP2NegativeSuffix = " = none";

bool IsDelimiter(char c) {
  switch (c) {
    case '=':
    case ',':
    case ';':
    case '"':
    case '\'':
    case '(':
    case ')':
    case '[':
    case ']':
    case '{':
    case '}':
    case '|':
      return true;
    default:
      return std::isspace(static_cast<unsigned char>(c)) != 0;
  }
}

// Keeps the candidate order and greedily accepts spans not overlapping an
// already accepted one; the result is ordered by span start.
std::vector<FieldMention> ResolveOverlaps(std::vector<FieldMention> ordered) {
  std::vector<FieldMention> accepted;
  for (FieldMention& m : ordered) {
    const bool clash = std::any_of(accepted.begin(), accepted.end(),
                                   [&](const FieldMention& a) { return a.span.Overlaps(m.span); });
    if (!clash) accepted.push_back(std::move(m));
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const FieldMention& a, const FieldMention& b) {
              return a.span.start < b.span.start;
            });
  return accepted;
}

}  // namespace

const std::array<FieldType, kFieldTypeCount> kAllFieldTypes = {
    FieldType::kIp,       FieldType::kEmail,    FieldType::kPid,
    FieldType::kUid,      FieldType::kUserName, FieldType::kTimestamp,
    FieldType::kService,  FieldType::kServer,   FieldType::kFilePath,
    FieldType::kUrl,      FieldType::kPort,     FieldType::kSession,
    FieldType::kDuration, FieldType::kDomain,   FieldType::kVersion};

std::string_view FieldTypeName(FieldType type) {
  return kFieldTypeNames[static_cast<size_t>(type)];
}

std::string FieldTypeDisplay(FieldType type) {
  std::string name(FieldTypeName(type));
  std::replace(name.begin(), name.end(), '_', ' ');
  return name;
}

std::optional<FieldType> ParseFieldType(std::string_view name) {
  for (size_t i = 0; i < kFieldTypeCount; ++i) {
    if (kFieldTypeNames[i] == name) return kAllFieldTypes[i];
  }
  return std::nullopt;
}

std::vector<Token> FieldTokens(std::string_view message) {
  std::vector<Token> tokens;
  size_t i = 0;
  while (i < message.size()) {
    while (i < message.size() && IsDelimiter(message[i])) ++i;
    size_t j = i;
    while (j < message.size() && !IsDelimiter(message[j])) ++j;
    size_t end = j;
    while (end > i && (message[end - 1] == ':' || message[end - 1] == '.')) --end;
    if (end > i) tokens.push_back(Token{std::string(message.substr(i, end - i)), i, end});
    i = j;
  }
  return tokens;
}

std::vector<Span> EnumerateSpans(size_t token_count, size_t max_n) {
  if (max_n < 1) throw UsageError("EnumerateSpans: max_n must be >= 1");
  std::vector<Span> spans;
  for (size_t n = 1; n <= std::min(max_n, token_count); ++n) {
    for (size_t s = 0; s + n <= token_count; ++s) spans.push_back(Span{s, s + n});
  }
  return spans;
}

std::string SpanText(const std::vector<Token>& tokens, const Span& span) {
  std::string out;
  for (size_t i = span.start; i < span.end; ++i) {
    if (i > span.start) out += ' ';
    out += tokens[i].text;
  }
  return out;
}

std::string BuildPrompt(std::string_view text, std::optional<FieldType> type,
                        PromptTemplate tmpl, Polarity polarity) {
  if (polarity == Polarity::kPositive) {
    if (!type) throw UsageError("positive prompt requires a field type");
    const std::string name = FieldTypeDisplay(*type);
    if (tmpl == PromptTemplate::kP2) return name + " = " + std::string(text);
    const bool vowel = std::string_view("aeiouAEIOU").find(name.front()) !=
                       std::string_view::npos;
    return std::string(text) + (vowel ? " is an " : " is a ") + name + " entity";
  }
  return std::string(text) +
         std::string(tmpl == PromptTemplate::kP1 ? kP1NegativeSuffix : kP2NegativeSuffix);
}

std::vector<PromptPair> GenerateTrainingPairs(std::string_view message,
                                              const std::vector<GoldMention>& gold,
                                              int ratio, uint64_t seed,
                                              PromptTemplate tmpl) {
  if (ratio < 0) throw UsageError("negative pair ratio must be >= 0");
  const std::vector<Token> tokens = FieldTokens(message);
  std::vector<PromptPair> pairs;
  for (const GoldMention& g : gold) {
    if (g.span.end > tokens.size() || g.span.length() < 1 ||
        g.span.length() > kMaxSpanTokens) {
      throw DataError("gold mention span out of range in: " + std::string(message));
    }
    pairs.push_back(PromptPair{std::string(message),
                               BuildPrompt(SpanText(tokens, g.span), g.field_type, tmpl,
                                           Polarity::kPositive),
                               Polarity::kPositive, g.span, g.field_type});
  }
  std::vector<Span> candidates;
  for (const Span& s : EnumerateSpans(tokens.size())) {
    const bool is_gold = std::any_of(gold.begin(), gold.end(),
                                     [&](const GoldMention& g) { return g.span == s; });
    if (!is_gold) candidates.push_back(s);
  }
  const size_t wanted = std::min(candidates.size(),
                                 static_cast<size_t>(ratio) * gold.size());
  Rng rng(seed);
  for (size_t k = 0; k < wanted; ++k) {
    const size_t pick = k + rng.Below(candidates.size() - k);
    std::swap(candidates[k], candidates[pick]);
    pairs.push_back(PromptPair{std::string(message),
                               BuildPrompt(SpanText(tokens, candidates[k]), std::nullopt,
                                           tmpl, Polarity::kNegative),
                               Polarity::kNegative, candidates[k], std::nullopt});
  }
  return pairs;
}

void Ruleset::Add(FieldType type, const std::string& pattern) {
  try {
    rules_.push_back(Rule{type, pattern, std::regex(pattern, std::regex::ECMAScript)});
  } catch (const std::regex_error& e) {
    throw DataError("invalid pattern for " + std::string(FieldTypeName(type)) + ": " +
                    pattern + " (" + e.what() + ")");
  }
}

Ruleset Ruleset::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("ruleset must be a JSON object");
  Ruleset rs;
  // Declaration order, not key order, decides the final tie-break.
  for (FieldType type : kAllFieldTypes) {
    auto it = j.find(std::string(FieldTypeName(type)));
    if (it == j.end()) continue;
    if (!it->is_array()) throw DataError("ruleset entries must be pattern lists");
    for (const auto& p : *it) {
      if (!p.is_string()) throw DataError("ruleset patterns must be strings");
      rs.Add(type, p.get<std::string>());
    }
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ParseFieldType(it.key())) throw DataError("unknown field type in ruleset: " + it.key());
  }
  return rs;
}

Ruleset Ruleset::FromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read ruleset: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("ruleset is not valid JSON: " + path);
  return FromJson(j);
}

Ruleset Ruleset::Default() {
  // Fixed-syntax types carry structural patterns; user_name, service and
  // server are only found next to a keyword.
  static const nlohmann::json kDefault = {
      {"ip", {R"(\b(\d{1,3}(?:\.\d{1,3}){3})\b)"}},
      {"email", {R"(\b([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,})\b)"}},
      {"pid", {R"(\bpid[ =:]+(\d+)\b)", R"(\b[A-Za-z][\w.-]*\[(\d+)\])"}},
      {"uid", {R"(\b(?:uid|euid)[ =:]+(\d+)\b)"}},
      {"user_name", {R"(\b(?:[Uu]ser|[Uu]sername|logname|ruser)[ =:]+([A-Za-z_][\w.-]*))"}},
      {"timestamp",
       {R"(\b(\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:[.,]\d+)?(?:Z|[+-]\d{2}:?\d{2})?))",
        R"(\b(\d{2}:\d{2}:\d{2}(?:\.\d+)?))"}},
      {"service", {R"(\b[Ss]ervice[ =:]+([A-Za-z][\w.-]*))", R"(\b([A-Za-z][\w-]*)\[\d+\])"}},
      {"server", {R"(\b(?:[Ss]erver|[Hh]ost|hostname|node)[ =:]+([A-Za-z0-9][\w.-]*))"}},
      {"file_path", {R"((?:^|[\s=])(/[\w.\-/]+))"}},
      {"url", {R"(\b([A-Za-z][A-Za-z0-9+.-]*://[^\s"'<>]+))"}},
      {"port", {R"(\bport[ =:]+(\d{1,5})\b)"}},
      {"session", {R"(\b[Ss]ession(?:[ _-]?[Ii][Dd])?[ =:]+([\w-]*\d[\w-]*))"}},
      {"duration",
       {R"(\b(\d+(?:\.\d+)?\s?(?:ms|us|ns|s|sec|secs|seconds|min|mins|minutes|h|hours))\b)"}},
      {"domain",
       {R"(\b((?:[A-Za-z0-9](?:[A-Za-z0-9-]*[A-Za-z0-9])?\.)+(?:com|org|net|edu|gov|io|local|internal|lan))\b)"}},
      {"version", {R"(\bv?(\d+\.\d+(?:\.\d+)+(?:-[\w.]+)?)\b)", R"(\bversion[ =:]+([\w.-]+))"}},
  };
  return FromJson(kDefault);
}

nlohmann::json Ruleset::ToJson() const {
  nlohmann::json out = nlohmann::json::object();
  for (const Rule& r : rules_) out[std::string(FieldTypeName(r.type))].push_back(r.source);
  return out;
}

std::vector<FieldMention> ExtractRules(std::string_view message, const Ruleset& ruleset) {
  const std::vector<Token> tokens = FieldTokens(message);
  std::unordered_map<size_t, size_t> by_begin;
  std::unordered_map<size_t, size_t> by_end;
  for (size_t i = 0; i < tokens.size(); ++i) {
    by_begin[tokens[i].begin] = i;
    by_end[tokens[i].end] = i;
  }
  struct Candidate {
    FieldMention mention;
    size_t rule;
  };
  std::vector<Candidate> candidates;
  const std::string text(message);
  for (size_t r = 0; r < ruleset.rules().size(); ++r) {
    const Ruleset::Rule& rule = ruleset.rules()[r];
    for (auto it = std::sregex_iterator(text.begin(), text.end(), rule.pattern);
         it != std::sregex_iterator(); ++it) {
      const std::smatch& m = *it;
      const size_t group = (m.size() > 1 && m[1].matched) ? 1 : 0;
      const size_t a = static_cast<size_t>(m.position(group));
      const size_t b = a + static_cast<size_t>(m.length(group));
      auto first = by_begin.find(a);
      auto last = by_end.find(b);
      if (first == by_begin.end() || last == by_end.end() || last->second < first->second) {
        continue;
      }
      Span span{first->second, last->second + 1};
      if (span.length() > kMaxSpanTokens) continue;
      candidates.push_back(Candidate{
          FieldMention{span, SpanText(tokens, span), rule.type,
                       std::numeric_limits<double>::infinity(), true},
          r});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& x, const Candidate& y) {
                     if (x.mention.span.length() != y.mention.span.length()) {
                       return x.mention.span.length() > y.mention.span.length();
                     }
                     if (x.mention.span.start != y.mention.span.start) {
                       return x.mention.span.start < y.mention.span.start;
                     }
                     if (x.mention.field_type != y.mention.field_type) {
                       return x.mention.field_type < y.mention.field_type;
                     }
                     return x.rule < y.rule;
                   });
  std::vector<FieldMention> ordered;
  ordered.reserve(candidates.size());
  for (Candidate& c : candidates) ordered.push_back(std::move(c.mention));
  return ResolveOverlaps(std::move(ordered));
}

std::vector<FieldMention> ExtractWithScorer(std::string_view message,
                                            const PromptScorer& scorer,
                                            PromptTemplate tmpl) {
  const std::vector<Token> tokens = FieldTokens(message);
  std::vector<FieldMention> winners;
  for (const Span& span : EnumerateSpans(tokens.size())) {
    const std::string text = SpanText(tokens, span);
    try {
      double best = scorer(message, BuildPrompt(text, std::nullopt, tmpl, Polarity::kNegative));
      std::optional<FieldType> winner;
      for (FieldType type : kAllFieldTypes) {
        const double s = scorer(message, BuildPrompt(text, type, tmpl, Polarity::kPositive));
        if (s > best) {
          best = s;
          winner = type;
        }
      }
      if (winner) winners.push_back(FieldMention{span, text, *winner, best, false});
    } catch (const std::exception& e) {
      throw DataError("scorer failed on span [" + std::to_string(span.start) + ", " +
                      std::to_string(span.end) + ") '" + text + "': " + e.what());
    }
  }
  std::stable_sort(winners.begin(), winners.end(),
                   [](const FieldMention& x, const FieldMention& y) {
                     if (x.score != y.score) return x.score > y.score;
                     if (x.span.length() != y.span.length()) {
                       return x.span.length() > y.span.length();
                     }
                     return x.span.start < y.span.start;
                   });
  return ResolveOverlaps(std::move(winners));
}

TableScorer TableScorer::FromJson(const nlohmann::json& j) {
  try {
    std::map<std::string, double, std::less<>> table;
    if (j.contains("entries")) {
      for (auto it = j.at("entries").begin(); it != j.at("entries").end(); ++it) {
        table[it.key()] = it.value().get<double>();
      }
    }
    return TableScorer(std::move(table), j.value("positive_default", -10.0),
                       j.value("negative_default", -1.0));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed scorer table: ") + e.what());
  }
}

double TableScorer::operator()(std::string_view, std::string_view prompt) const {
  auto it = table_.find(prompt);
  if (it != table_.end()) return it->second;
  if (prompt.ends_with(kP1NegativeSuffix) || prompt.ends_with(kP2NegativeSuffix)) {
    return negative_default_;
  }
  return positive_default_;
}

nlohmann::json MentionToJson(const FieldMention& m) {
  nlohmann::json j = {{"start", m.span.start},
                      {"end", m.span.end},
                      {"text", m.text},
                      {"type", FieldTypeName(m.field_type)},
                      {"rule", m.rule_hit}};
  j["score"] = std::isfinite(m.score) ? nlohmann::json(m.score) : nlohmann::json(nullptr);
  return j;
}

FieldMention MentionFromJson(const nlohmann::json& j) {
  FieldMention m;
  m.span = Span{j.at("start").get<size_t>(), j.at("end").get<size_t>()};
  m.text = j.at("text").get<std::string>();
  auto type = ParseFieldType(j.at("type").get<std::string>());
  if (!type) throw DataError("unknown field type: " + j.at("type").get<std::string>());
  m.field_type = *type;
  m.rule_hit = j.value("rule", false);
  m.score = j.at("score").is_null() ? std::numeric_limits<double>::infinity()
                                    : j.at("score").get<double>();
  return m;
}

nlohmann::json ParsedLogToJson(const ParsedLog& log) {
  nlohmann::json mentions = nlohmann::json::array();
  for (const FieldMention& m : log.mentions) mentions.push_back(MentionToJson(m));
  return {{"index", log.record_index},
          {"ts", log.record.timestamp_ms},
          {"msg", log.record.raw_text},
          {"label", LabelName(log.record.label)},
          {"src", log.record.source_id},
          {"template_id", log.template_id},
          {"mentions", std::move(mentions)}};
}

ParsedLog ParsedLogFromJson(const nlohmann::json& j) {
  try {
    ParsedLog log;
    log.record_index = j.at("index").get<size_t>();
    log.record.timestamp_ms = j.at("ts").get<int64_t>();
    log.record.raw_text = j.at("msg").get<std::string>();
    auto label = ParseLabel(j.value("label", "unlabeled"));
    if (!label) throw DataError("unknown label in parsed log");
    log.record.label = *label;
    log.record.source_id = j.value("src", "");
    log.template_id = j.at("template_id").get<std::string>();
    for (const auto& m : j.value("mentions", nlohmann::json::array())) {
      log.mentions.push_back(MentionFromJson(m));
    }
    return log;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed parsed log: ") + e.what());
  }
}

}  // namespace glad
