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

// Online template mining with a fixed-depth prefix tree. Messages are
// routed by token count and leading tokens to a leaf holding candidate
// clusters; the most similar cluster above the threshold absorbs the
// message, otherwise a new cluster is created.

#ifndef GLAD_TEMPLATE_MINER_H_
#define GLAD_TEMPLATE_MINER_H_

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace glad {

inline constexpr std::string_view kWildcard = "<*>";

struct EventTemplate {
  std::string template_id;
  std::vector<std::string> tokens;
  size_t support = 0;

  std::string Text() const;
};

struct MinerConfig {
  int depth = 4;
  double similarity_threshold = 0.5;
  int max_children = 100;
};

// Whitespace tokenization followed by masking of digit-only tokens, long
// hex strings, IPv4 addresses (optionally with port), paths and URLs.
std::vector<std::string> MaskedTokens(std::string_view message);

// Stable 8-hex-digit identifier of a token list.
std::string TemplateId(const std::vector<std::string>& tokens);

class TemplateMiner {
 public:
  struct Match {
    size_t cluster = 0;
    std::string template_id;
  };

  explicit TemplateMiner(MinerConfig config = {});

  // Matches or creates a cluster for `message` and returns the template id
  // it holds after the update. Throws DataError on a message without tokens.
  Match Parse(std::string_view message);
  std::string ParseMessage(std::string_view message) {
    return Parse(message).template_id;
  }

  // Template currently held by a cluster; ids change when clusters merge,
  // so callers that need final ids should remember cluster indices.
  const EventTemplate& Cluster(size_t cluster) const;
  size_t cluster_count() const { return clusters_.size(); }

  // Throws DataError for an unknown id.
  const EventTemplate& GetTemplate(const std::string& template_id) const;

  const std::vector<EventTemplate>& templates() const { return clusters_; }
  const MinerConfig& config() const { return config_; }

  nlohmann::json ToJson() const;
  static TemplateMiner FromJson(const nlohmann::json& j, MinerConfig config = {});

 private:
  struct Node {
    std::map<std::string, std::unique_ptr<Node>, std::less<>> children;
    std::vector<size_t> clusters;
  };

  Node* Descend(const std::vector<std::string>& tokens, bool create);
  void AddCluster(EventTemplate tmpl);
  void Reindex(size_t cluster, const std::string& old_id);

  MinerConfig config_;
  Node root_;
  std::vector<EventTemplate> clusters_;
  std::unordered_map<std::string, size_t> by_id_;
};

}  // namespace glad

#endif  // GLAD_TEMPLATE_MINER_H_
