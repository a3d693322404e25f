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

#include "picket/moderate.hpp"

#include <algorithm>

namespace picket {

std::shared_ptr<const PreparedImage> PreparedImageCache::get(
    const std::string& digest, const std::string& preamble_hash) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find({digest, preamble_hash});
  if (it == entries_.end()) return nullptr;
  order_.splice(order_.begin(), order_, it->second.second);
  return it->second.first;
}

void PreparedImageCache::put(std::shared_ptr<const PreparedImage> prepared) {
  if (capacity_ == 0) return;
  Key key{prepared->digest, prepared->preamble_sha256};
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(key);
  if (it != entries_.end()) {
    it->second.first = std::move(prepared);
    order_.splice(order_.begin(), order_, it->second.second);
    return;
  }
  order_.push_front(key);
  entries_.emplace(key, std::make_pair(std::move(prepared), order_.begin()));
  if (entries_.size() > capacity_) {
    entries_.erase(order_.back());
    order_.pop_back();
  }
}

std::size_t PreparedImageCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

ModerateMode moderate_mode_from_string(std::string_view name) {
  if (name == "score") return ModerateMode::score;
  if (name == "verdict") return ModerateMode::verdict;
  if (name == "rationale") return ModerateMode::rationale;
  throw Error(Errc::invalid_request,
              "unknown moderation mode: " + std::string(name));
}

const char* to_string(ModerateMode mode) {
  switch (mode) {
    case ModerateMode::score: return "score";
    case ModerateMode::verdict: return "verdict";
    case ModerateMode::rationale: return "rationale";
  }
  return "?";
}

ModerationEngine::ModerationEngine(std::shared_ptr<Backend> backend,
                                   PolicyRegistry registry,
                                   EngineOptions options)
    : backend_(std::move(backend)),
      registry_(std::move(registry)),
      options_(options),
      cache_(options.cache_capacity) {}

std::shared_ptr<const PreparedImage> ModerationEngine::prepared_for(
    const ImageRef& image, const std::string& preamble,
    const std::string& preamble_hash, ModerationStats& stats) {
  const bool caching = options_.use_prefix_cache &&
                       backend_->capabilities().supports_prefix_cache;
  if (caching) {
    if (auto cached = cache_.get(image.digest, preamble_hash)) {
      stats.cache_hit = true;
      return cached;
    }
  }
  auto prepared = backend_->prepare(image, preamble);
  ++stats.prepares;
  if (caching) cache_.put(prepared);
  return prepared;
}

std::vector<ModerationOutcome> ModerationEngine::moderate_multi(
    const ImageRef& image, const ModerationRequest& req,
    ModerationStats* stats_out) {
  if (req.policy_ids.empty()) {
    throw Error(Errc::empty_policy_set,
                "at least one policy is required");
  }

  ModerationStats stats;
  const std::string preamble = prompt_shared_prefix(options_.style);
  const std::string preamble_hash = sha256_hex(preamble);

  const bool caching = options_.use_prefix_cache &&
                       backend_->capabilities().supports_prefix_cache;

  std::vector<ModerationOutcome> outcomes;
  outcomes.reserve(req.policy_ids.size());
  std::shared_ptr<const PreparedImage> shared_prepared;

  for (const std::string& policy_id : req.policy_ids) {
    ModerationOutcome outcome;
    outcome.policy_id = policy_id;
    try {
      const Policy& policy = registry_.at(policy_id);
      const std::string prompt = render_prompt(policy, options_.style);

      std::shared_ptr<const PreparedImage> prepared;
      if (caching) {
        if (!shared_prepared) {
          shared_prepared = prepared_for(image, preamble, preamble_hash,
                                         stats);
        }
        prepared = shared_prepared;
      } else {
        prepared = backend_->prepare(image, preamble);
        ++stats.prepares;
      }

      const TokenLikelihoods lk =
          backend_->score_first_token(*prepared, prompt);
      ++stats.scores;
      const double p = probability(lk, req.scoring);

      double threshold = req.default_threshold;
      auto it = req.policy_thresholds.find(policy_id);
      if (it != req.policy_thresholds.end()) threshold = it->second;
      outcome.verdict = decide(p, threshold);

      if (req.mode == ModerateMode::rationale) {
        try {
          outcome.rationale = backend_->generate_rationale(*prepared, prompt);
        } catch (const Error& e) {
          outcome.rationale_error = std::string(e.code_name()) + ": " +
                                    e.what();
        }
      }
    } catch (const Error& e) {
      outcome.error = e.what();
      outcome.error_code = e.code_name();
    }
    outcomes.push_back(std::move(outcome));
  }

  if (stats_out != nullptr) *stats_out = stats;
  return outcomes;
}

}  // namespace picket
