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

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "picket/http_backend.hpp"
#include "picket/moderate.hpp"

namespace httplib {
class Server;
}  // namespace httplib

namespace picket {

// Serving configuration (JSON document, see README). Exactly one backend:
// a remote scoring server or a table-driven mock (tests, dry runs).
struct ServiceConfig {
  std::optional<HttpBackendConfig> http_backend;
  std::optional<std::string> mock_manifest;  // path to a mock table (JSONL)

  std::string policy_file;  // optional path; empty = builtins only
  bool include_builtins = true;
  PromptStyle style = PromptStyle::shieldgemma2;

  bool use_prefix_cache = true;
  std::size_t cache_capacity = 64;

  double default_temperature = 1.0;
  double default_alpha = 0.0;
  double default_threshold = 0.5;

  std::string listen = "127.0.0.1:8080";
  std::size_t max_inline_bytes = 8 * 1024 * 1024;
  int url_fetch_timeout_ms = 10000;
};

// Overrides ServiceConfig.listen when set in the environment.
inline constexpr const char* kListenEnvVar = "PICKET_LISTEN";

ServiceConfig load_service_config(const std::string& document);

// Builds the registry (builtins plus the config's policy file, if any).
PolicyRegistry make_registry(const ServiceConfig& config);

// Builds the configured backend; the registry is needed so a mock backend
// can recover policies from rendered prompts.
std::shared_ptr<Backend> make_backend(const ServiceConfig& config,
                                      const PolicyRegistry& registry);

// The HTTP moderation gateway.
//
//   POST /v1/moderate   score an image against policies
//   GET  /v1/policies   registered policy ids, titles, definitions
//   GET  /healthz       liveness
//
// Request images arrive inline ({"bytes_b64"}, size-capped), by URL
// ({"url", "digest"?}; fetched and hash-verified only when no digest is
// supplied), or digest-only ({"digest"}, for backends that key on it).
//
// Response bodies are deterministic functions of (image digest, policies,
// config); per-request instrumentation (timing, prepare/score counts, cache
// hit) travels in X-Picket-* headers so identical requests yield identical
// bytes. Errors map to 400 (invalid request), 422 (unknown policy),
// 502 (backend failure) and 504 (backend timeout) with machine-readable
// {"error": {"code", "message"}} bodies.
class ModerationService {
 public:
  struct Options {
    double default_temperature = 1.0;
    double default_alpha = 0.0;
    double default_threshold = 0.5;
    std::size_t max_inline_bytes = 8 * 1024 * 1024;
    int url_fetch_timeout_ms = 10000;
  };

  ModerationService(std::shared_ptr<ModerationEngine> engine, Options options);

  // Registers the routes; the caller owns binding and serving, which lets
  // tests use an ephemeral port.
  void attach(httplib::Server& server);

  // Binds "host:port" and serves until stopped. Throws InvalidRequest for an
  // unusable listen address, IoError when the bind fails.
  void run(const std::string& listen);

  const ModerationEngine& engine() const { return *engine_; }

 private:
  std::string handle_moderate(const std::string& body,
                              std::string* error_code, int* status,
                              ModerationStats* stats);
  std::string handle_policies() const;

  std::shared_ptr<ModerationEngine> engine_;
  Options options_;
};

// Wires config -> registry -> backend -> engine -> service.
std::unique_ptr<ModerationService> make_service(const ServiceConfig& config);

}  // namespace picket
