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

#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "picket/backend.hpp"
#include "picket/policy.hpp"

namespace picket {

struct MockBackendOptions {
  BackendCapabilities capabilities{
      .supports_first_token_logprobs = true,
      .supports_prefix_cache = true,
      .supports_rationale_mode = true,
  };
  // strict: unknown digest or missing policy entry is an error; otherwise
  // `default_likelihoods` answers for any miss.
  bool strict = true;
  TokenLikelihoods default_likelihoods{-3.0, -0.05};
};

// Table-driven deterministic backend: end-to-end tests and CI need no model.
// Rows are keyed by image digest with either a per-policy likelihood map, a
// digest-wide default pair, or both. The policy is recovered from the prompt
// by locating the registered policy whose rendered block the prompt contains.
//
// Manifest format (JSONL), one row per digest:
//   {"digest": "<64 hex>",
//    "policies": {"sexual": [-0.1, -2.3], "danger": [-3.0, -0.2]},
//    "default": [-2.0, -0.5],
//    "text": "No. Nothing in the image matches the policy."}
// Likelihood pairs are [ll_yes, ll_no].
class MockBackend final : public Backend {
 public:
  using Options = MockBackendOptions;

  struct Row {
    std::map<std::string, TokenLikelihoods> per_policy;
    std::optional<TokenLikelihoods> fallback;
    std::optional<std::string> text;  // rationale-mode completion
  };

  MockBackend(std::vector<Policy> policies, Options options = {});
  // Counters are atomics, so the type is immovable; pass the full row table
  // here when constructing in place (e.g. under make_shared).
  MockBackend(std::vector<Policy> policies, std::map<std::string, Row> rows,
              Options options);

  static std::map<std::string, Row> load_rows(
      const std::filesystem::path& path);

  static MockBackend from_manifest(const std::filesystem::path& path,
                                   std::vector<Policy> policies,
                                   Options options = {});

  void set_row(const std::string& digest, Row row);
  void set_likelihoods(const std::string& digest,
                       const std::string& policy_id, TokenLikelihoods lk);
  void set_default_likelihoods(const std::string& digest,
                               TokenLikelihoods lk);
  void set_text(const std::string& digest, std::string text);

  std::string name() const override { return "mock"; }
  BackendCapabilities capabilities() const override {
    return options_.capabilities;
  }

  // Cumulative instrumentation.
  std::size_t prepare_count() const { return prepare_count_.load(); }
  std::size_t score_count() const { return score_count_.load(); }
  void reset_counters();

 protected:
  std::shared_ptr<const PreparedImage> do_prepare(
      const ImageRef& image, std::string_view preamble) override;
  TokenLikelihoods do_score(const PreparedImage& prepared,
                            std::string_view prompt,
                            const CandidatePair& candidates) override;
  std::string do_generate(const PreparedImage& prepared,
                          std::string_view prompt) override;

 private:
  const Row* find_row(const std::string& digest) const;
  const std::string* policy_for_prompt(std::string_view prompt) const;

  std::vector<Policy> policies_;
  std::vector<std::string> policy_blocks_;  // parallel to policies_
  Options options_;
  std::map<std::string, Row> rows_;  // immutable once serving starts
  std::atomic<std::size_t> prepare_count_{0};
  std::atomic<std::size_t> score_count_{0};
};

}  // namespace picket
