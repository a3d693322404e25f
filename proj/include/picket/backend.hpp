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

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "picket/error.hpp"
#include "picket/image_ref.hpp"
#include "picket/scoring.hpp"

namespace picket {

struct BackendCapabilities {
  bool supports_first_token_logprobs = false;
  bool supports_prefix_cache = false;
  bool supports_rationale_mode = false;
};

// Literal answer strings whose first-token log-likelihoods are requested.
// Resolving each to a concrete token id (case, leading whitespace) is the
// backend adapter's job; callers only see two scalars back.
struct CandidatePair {
  std::string yes = "Yes";
  std::string no = "No";
};

struct RationaleResult {
  bool yes = false;  // parsed label
  std::string rationale;
};

// Parses a rationale-mode completion. A structured JSON object with "label"
// and "rationale" fields takes precedence; otherwise the text must start
// with "Yes" or "No" (case-insensitive) and the remainder is the rationale.
// Throws UnparseableOutput.
RationaleResult parse_rationale(std::string_view raw);

// Per-(image, preamble) state a backend hands back from prepare() and reuses
// across the per-policy scorings of one image.
struct PreparedImage {
  std::string digest;
  std::string preamble_sha256;
  std::string handle;  // backend-specific token, opaque to callers
};

// A VLM that scores moderation prompts against images. Implementations must
// be safe for concurrent in-flight requests; per-request state stays inside
// the call.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string name() const = 0;
  virtual BackendCapabilities capabilities() const = 0;

  // Prepares (image, shared preamble) once; the result is reusable for every
  // prompt that starts with that preamble.
  std::shared_ptr<const PreparedImage> prepare(const ImageRef& image,
                                               std::string_view preamble);

  // Log-likelihoods of the candidates' first tokens at generation position 1.
  // Requires supports_first_token_logprobs.
  TokenLikelihoods score_first_token(const PreparedImage& prepared,
                                     std::string_view prompt,
                                     const CandidatePair& candidates = {});

  // Convenience: prepare with an empty preamble, then score.
  TokenLikelihoods score_first_token(const ImageRef& image,
                                     std::string_view prompt,
                                     const CandidatePair& candidates = {});

  // Free-text completion parsed into a label + rationale.
  // Requires supports_rationale_mode.
  RationaleResult generate_rationale(const PreparedImage& prepared,
                                     std::string_view prompt);
  RationaleResult generate_rationale(const ImageRef& image,
                                     std::string_view prompt);

 protected:
  virtual std::shared_ptr<const PreparedImage> do_prepare(
      const ImageRef& image, std::string_view preamble) = 0;
  virtual TokenLikelihoods do_score(const PreparedImage& prepared,
                                    std::string_view prompt,
                                    const CandidatePair& candidates) = 0;
  virtual std::string do_generate(const PreparedImage& prepared,
                                  std::string_view prompt) = 0;
};

// Bounded exponential backoff. Only retryable error codes
// (BackendUnavailable, Timeout) are retried; everything else propagates on
// the first failure.
struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{2000};
  // Injection point for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleeper;
};

void retry_sleep(const RetryPolicy& policy, std::chrono::milliseconds delay);

template <typename F>
auto with_retries(const RetryPolicy& policy, F&& fn)
    -> decltype(fn()) {
  std::chrono::milliseconds delay = policy.initial_backoff;
  int attempt = 1;
  for (;;) {
    try {
      return fn();
    } catch (const Error& e) {
      if (!errc_retryable(e.code()) || attempt >= policy.max_attempts) {
        throw;
      }
    }
    retry_sleep(policy, delay);
    delay = std::min(
        policy.max_backoff,
        std::chrono::milliseconds(static_cast<long long>(
            static_cast<double>(delay.count()) * policy.multiplier)));
    ++attempt;
  }
}

}  // namespace picket
