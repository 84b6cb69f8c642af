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

#include "glad/template_miner.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <regex>

#include "glad/common.h"

namespace glad {
namespace {

bool HasDigit(std::string_view token) {
  return std::any_of(token.begin(), token.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

bool AllDigits(std::string_view token) {
  return !token.empty() &&
         std::all_of(token.begin(), token.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

bool LongHex(std::string_view token) {
  if (token.starts_with("0x") || token.starts_with("0X")) token.remove_prefix(2);
  return token.size() >= 8 &&
         std::all_of(token.begin(), token.end(),
                     [](unsigned char c) { return std::isxdigit(c); });
}

bool LooksLikeIp(const std::string& token) {
  static const std::regex kIp(R"(^(\d{1,3}\.){3}\d{1,3}(:\d+)?[,.;]?$)");
  return std::regex_match(token, kIp);
}

bool LooksLikePath(std::string_view token) {
  if (token.size() > 1 && token.front() == '/') return true;
  const size_t scheme = token.find("://");
  if (scheme != std::string_view::npos && scheme > 0) {
    return std::all_of(token.begin(), token.begin() + scheme, [](unsigned char c) {
      return std::isalnum(c) || c == '+' || c == '.' || c == '-';
    });
  }
  return false;
}

// Fraction of template positions equal to the message token; wildcard
// positions do not count as equal but break ties between candidates.
std::pair<double, int> Similarity(const std::vector<std::string>& tmpl,
                                  const std::vector<std::string>& tokens) {
  int equal = 0;
  int wildcards = 0;
  for (size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == kWildcard) {
      ++wildcards;
      continue;
    }
    if (tmpl[i] == tokens[i]) ++equal;
  }
  return {static_cast<double>(equal) / static_cast<double>(tmpl.size()), wildcards};
}

}  // namespace

std::string EventTemplate::Text() const {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::vector<std::string> MaskedTokens(std::string_view message) {
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < message.size()) {
    while (i < message.size() && std::isspace(static_cast<unsigned char>(message[i]))) ++i;
    size_t j = i;
    while (j < message.size() && !std::isspace(static_cast<unsigned char>(message[j]))) ++j;
    if (j > i) {
      std::string token(message.substr(i, j - i));
      if (AllDigits(token) || LongHex(token) || LooksLikeIp(token) ||
          LooksLikePath(token)) {
        token = std::string(kWildcard);
      }
      tokens.push_back(std::move(token));
    }
    i = j;
  }
  return tokens;
}

std::string TemplateId(const std::vector<std::string>& tokens) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) h = Fnv1a64(" ", h);
    h = Fnv1a64(tokens[i], h);
  }
  const uint32_t folded = static_cast<uint32_t>(h ^ (h >> 32));
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", folded);
  return buf;
}

TemplateMiner::TemplateMiner(MinerConfig config) : config_(config) {
  if (config_.depth < 3) throw UsageError("template miner depth must be >= 3");
  if (config_.max_children < 2) throw UsageError("max_children must be >= 2");
}

TemplateMiner::Node* TemplateMiner::Descend(const std::vector<std::string>& tokens,
                                            bool create) {
  const std::string length_key = std::to_string(tokens.size());
  auto it = root_.children.find(length_key);
  if (it == root_.children.end()) {
    if (!create) return nullptr;
    it = root_.children.emplace(length_key, std::make_unique<Node>()).first;
  }
  Node* node = it->second.get();
  const size_t layers =
      std::min(static_cast<size_t>(config_.depth - 3), tokens.size());
  const std::string wildcard(kWildcard);
  for (size_t d = 0; d < layers; ++d) {
    const std::string& token = tokens[d];
    auto child = node->children.find(token);
    if (child != node->children.end()) {
      node = child->second.get();
      continue;
    }
    auto wild = node->children.find(wildcard);
    if (!create) {
      if (wild == node->children.end()) return nullptr;
      node = wild->second.get();
      continue;
    }
    const size_t count = node->children.size();
    const size_t limit = static_cast<size_t>(config_.max_children);
    if (HasDigit(token)) {
      if (wild == node->children.end()) {
        wild = node->children.emplace(wildcard, std::make_unique<Node>()).first;
      }
      node = wild->second.get();
    } else if (wild != node->children.end()) {
      if (count < limit) {
        node = node->children.emplace(token, std::make_unique<Node>()).first->second.get();
      } else {
        node = wild->second.get();
      }
    } else if (count + 1 < limit) {
      node = node->children.emplace(token, std::make_unique<Node>()).first->second.get();
    } else {
      node = node->children.emplace(wildcard, std::make_unique<Node>()).first->second.get();
    }
  }
  return node;
}

void TemplateMiner::AddCluster(EventTemplate tmpl) {
  const size_t index = clusters_.size();
  Node* leaf = Descend(tmpl.tokens, /*create=*/true);
  leaf->clusters.push_back(index);
  by_id_[tmpl.template_id] = index;
  clusters_.push_back(std::move(tmpl));
}

void TemplateMiner::Reindex(size_t cluster, const std::string& old_id) {
  auto it = by_id_.find(old_id);
  if (it != by_id_.end() && it->second == cluster) by_id_.erase(it);
  by_id_[clusters_[cluster].template_id] = cluster;
}

TemplateMiner::Match TemplateMiner::Parse(std::string_view message) {
  std::vector<std::string> tokens = MaskedTokens(message);
  if (tokens.empty()) throw DataError("cannot mine a template from an empty message");

  Node* leaf = Descend(tokens, /*create=*/false);
  std::optional<size_t> best;
  double best_sim = -1.0;
  int best_wild = -1;
  if (leaf != nullptr) {
    for (size_t c : leaf->clusters) {
      auto [sim, wild] = Similarity(clusters_[c].tokens, tokens);
      if (sim > best_sim || (sim == best_sim && wild > best_wild)) {
        best_sim = sim;
        best_wild = wild;
        best = c;
      }
    }
  }
  if (best && best_sim >= config_.similarity_threshold) {
    EventTemplate& tmpl = clusters_[*best];
    bool changed = false;
    for (size_t i = 0; i < tokens.size(); ++i) {
      if (tmpl.tokens[i] != tokens[i] && tmpl.tokens[i] != kWildcard) {
        tmpl.tokens[i] = std::string(kWildcard);
        changed = true;
      }
    }
    ++tmpl.support;
    if (changed) {
      const std::string old_id = tmpl.template_id;
      tmpl.template_id = TemplateId(tmpl.tokens);
      Reindex(*best, old_id);
    }
    return {*best, tmpl.template_id};
  }
  EventTemplate tmpl{TemplateId(tokens), tokens, 1};
  const std::string id = tmpl.template_id;
  AddCluster(std::move(tmpl));
  return {clusters_.size() - 1, id};
}

const EventTemplate& TemplateMiner::Cluster(size_t cluster) const {
  if (cluster >= clusters_.size()) throw DataError("unknown template cluster");
  return clusters_[cluster];
}

const EventTemplate& TemplateMiner::GetTemplate(const std::string& template_id) const {
  auto it = by_id_.find(template_id);
  if (it == by_id_.end()) throw DataError("unknown template id: " + template_id);
  return clusters_[it->second];
}

nlohmann::json TemplateMiner::ToJson() const {
  nlohmann::json out = nlohmann::json::array();
  for (const EventTemplate& t : clusters_) {
    out.push_back({{"template_id", t.template_id},
                   {"tokens", t.tokens},
                   {"support", t.support}});
  }
  return out;
}

TemplateMiner TemplateMiner::FromJson(const nlohmann::json& j, MinerConfig config) {
  if (!j.is_array()) throw DataError("template store must be a JSON array");
  TemplateMiner miner(config);
  for (const auto& item : j) {
    EventTemplate t;
    try {
      t.template_id = item.at("template_id").get<std::string>();
      t.tokens = item.at("tokens").get<std::vector<std::string>>();
      t.support = item.at("support").get<size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed template entry: ") + e.what());
    }
    if (t.tokens.empty() || t.support < 1) {
      throw DataError("template entry without tokens or support");
    }
    miner.AddCluster(std::move(t));
  }
  return miner;
}

}  // namespace glad
