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

#include <mutex>
#include <optional>
#include <string>

#include "picket/backend.hpp"

namespace picket {

// Adapter for a completion-style HTTP scoring server:
//
//   GET  /v1/capabilities       -> {"name", "first_token_logprobs",
//                                   "prefix_cache", "rationale"}
//   POST /v1/prepare            -> {"prepared_id"}
//   POST /v1/score_first_token  -> {"first_token_logprobs":
//                                    [{"token": "Yes", "logprob": -0.1}, ...]}
//   POST /v1/generate           -> {"text": "..."}
//
// Requests carry {"image": {"digest", "bytes_b64" | "url"}, "prompt", ...};
// once an image is prepared, follow-up calls send its "prepared_id" instead
// of the bytes. Alternate servers get their own adapter; the engine only
// sees the Backend interface.
struct HttpBackendConfig {
  std::string base_url;       // e.g. "http://scorer:8000"
  std::string auth_env_var;   // env var holding a bearer token; "" = no auth
  int timeout_ms = 10000;
  RetryPolicy retry;
  // Skips the capabilities endpoint when set.
  std::optional<BackendCapabilities> capabilities_override;
};

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  std::string name() const override;
  BackendCapabilities capabilities() const override;

 protected:
  std::shared_ptr<const PreparedImage> do_prepare(
      const ImageRef& image, std::string_view preamble) override;
  TokenLikelihoods do_score(const PreparedImage& prepared,
                            std::string_view prompt,
                            const CandidatePair& candidates) override;
  std::string do_generate(const PreparedImage& prepared,
                          std::string_view prompt) override;

 private:
  std::string post_json(const std::string& path, const std::string& body);
  void fetch_capabilities_once() const;

  HttpBackendConfig config_;
  std::string bearer_token_;
  mutable std::mutex mu_;
  mutable std::optional<BackendCapabilities> capabilities_;
  mutable std::string remote_name_;
};

}  // namespace picket
