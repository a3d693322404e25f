// Copyright 2026 The picket Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "picket/backend.hpp"
#include "picket/policy.hpp"
#include "picket/scoring.hpp"

namespace picket {

// Bounded LRU of prepared (image, preamble) contexts, keyed by
// (image digest, preamble hash) so distinct preambles never collide.
// Internally synchronized; eviction only costs a re-prepare.
class PreparedImageCache {
 public:
  explicit PreparedImageCache(std::size_t capacity) : capacity_(capacity) {}

  std::shared_ptr<const PreparedImage> get(const std::string& digest,
                                           const std::string& preamble_hash);
  void put(std::shared_ptr<const PreparedImage> prepared);
  std::size_t size() const;

 private:
  using Key = std::pair<std::string, std::string>;
  mutable std::mutex mu_;
  std::size_t capacity_;
  std::list<Key> order_;  // front = most recent
  std::map<Key, std::pair<std::shared_ptr<const PreparedImage>,
                          std::list<Key>::iterator>>
      entries_;
};

enum class ModerateMode { score, verdict, rationale };

ModerateMode moderate_mode_from_string(std::string_view name);
const char* to_string(ModerateMode mode);

// One policy's result. `error` is set when this policy's scoring failed;
// partial results are flagged, never dropped.
struct ModerationOutcome {
  std::string policy_id;
  std::optional<Verdict> verdict;
  std::optional<RationaleResult> rationale;
  std::optional<std::string> rationale_error;  // capability fallback etc.
  std::optional<std::string> error;
  std::optional<std::string> error_code;
};

// Backend calls made while serving one request.
struct ModerationStats {
  std::size_t prepares = 0;
  std::size_t scores = 0;
  bool cache_hit = false;
};

struct ModerationRequest {
  std::vector<std::string> policy_ids;  // must be nonempty
  ScoringConfig scoring;
  double default_threshold = 0.5;
  std::map<std::string, double> policy_thresholds;  // per-policy overrides
  ModerateMode mode = ModerateMode::verdict;
};

struct EngineOptions {
  PromptStyle style = PromptStyle::shieldgemma2;
  bool use_prefix_cache = true;
  std::size_t cache_capacity = 64;
};

// Scores one image against k policies, preparing the image once per
// (digest, preamble) when the backend supports prefix caching.
class ModerationEngine {
 public:
  ModerationEngine(std::shared_ptr<Backend> backend, PolicyRegistry registry,
                   EngineOptions options = {});

  std::vector<ModerationOutcome> moderate_multi(const ImageRef& image,
                                                const ModerationRequest& req,
                                                ModerationStats* stats =
                                                    nullptr);

  const PolicyRegistry& registry() const { return registry_; }
  const Backend& backend() const { return *backend_; }
  const EngineOptions& options() const { return options_; }

 private:
  std::shared_ptr<const PreparedImage> prepared_for(
      const ImageRef& image, const std::string& preamble,
      const std::string& preamble_hash, ModerationStats& stats);

  std::shared_ptr<Backend> backend_;
  PolicyRegistry registry_;
  EngineOptions options_;
  PreparedImageCache cache_;
};

}  // namespace picket
