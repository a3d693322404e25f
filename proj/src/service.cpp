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

#include "picket/service.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "picket/base64.hpp"
#include "picket/image_ref.hpp"
#include "picket/log.hpp"
#include "picket/mock_backend.hpp"

namespace picket {
namespace {

using nlohmann::ordered_json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::io_error, "cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int status_for(Errc code) {
  switch (code) {
    case Errc::timeout:
      return 504;
    case Errc::backend_unavailable:
    case Errc::malformed_response:
    case Errc::capability_missing:
    case Errc::unparseable_output:
      return 502;
    case Errc::unknown_policy:
      return 422;
    default:
      return 400;
  }
}

int status_for_name(const std::string& code_name) {
  if (code_name == "Timeout") return 504;
  if (code_name == "BackendUnavailable" || code_name == "MalformedResponse" ||
      code_name == "CapabilityMissing" || code_name == "UnparseableOutput") {
    return 502;
  }
  if (code_name == "UnknownPolicy") return 422;
  return 400;
}

std::string error_body(const std::string& code_name,
                       const std::string& message) {
  ordered_json j;
  j["error"] = {{"code", code_name}, {"message", message}};
  return j.dump();
}

// scheme://host[:port]/path -> (scheme://host[:port], /path?query)
std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::invalid_request, "unsupported image URL: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, "/"};
  }
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string fetch_url(const std::string& url, int timeout_ms) {
  auto [base, path] = split_url(url);
  httplib::Client client(base);
  client.set_connection_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  client.set_follow_location(true);
  auto res = client.Get(path);
  if (!res) {
    throw Error(Errc::invalid_request, "image URL fetch failed: " + url);
  }
  if (res->status != 200) {
    throw Error(Errc::invalid_request,
                "image URL returned status " + std::to_string(res->status));
  }
  return res->body;
}

double require_finite(const ordered_json& j, const char* field,
                      double fallback) {
  if (!j.contains(field)) return fallback;
  if (!j[field].is_number()) {
    throw Error(Errc::invalid_request,
                std::string(field) + " must be a number");
  }
  double value = j[field].get<double>();
  if (!std::isfinite(value)) {
    throw Error(Errc::invalid_request,
                std::string(field) + " must be finite");
  }
  return value;
}

void check_threshold_range(double value, const std::string& what) {
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
    throw Error(Errc::invalid_request, what + " must lie in [0, 1]");
  }
}

}  // namespace

ServiceConfig load_service_config(const std::string& document) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("service config: ") + e.what());
  }
  if (!doc.is_object()) {
    throw Error(Errc::parse_error, "service config must be a JSON object");
  }

  ServiceConfig config;
  try {
    if (doc.contains("backend")) {
      const auto& backend = doc["backend"];
      if (!backend.is_object()) {
        throw Error(Errc::parse_error, "'backend' must be an object");
      }
      if (backend.contains("mock_manifest")) {
        config.mock_manifest = backend["mock_manifest"].get<std::string>();
      } else if (backend.contains("base_url")) {
        HttpBackendConfig http;
        http.base_url = backend["base_url"].get<std::string>();
        if (backend.contains("auth_env_var")) {
          http.auth_env_var = backend["auth_env_var"].get<std::string>();
        }
        if (backend.contains("timeout_ms")) {
          http.timeout_ms = backend["timeout_ms"].get<int>();
        }
        config.http_backend = std::move(http);
      } else {
        throw Error(Errc::parse_error,
                    "'backend' needs a base_url or a mock_manifest");
      }
    }
    if (doc.contains("policy_file")) {
      config.policy_file = doc["policy_file"].get<std::string>();
    }
    if (doc.contains("include_builtins")) {
      config.include_builtins = doc["include_builtins"].get<bool>();
    }
    if (doc.contains("prompt_style")) {
      config.style = prompt_style_from_string(
          doc["prompt_style"].get<std::string>());
    }
    if (doc.contains("cache")) {
      const auto& cache = doc["cache"];
      if (cache.contains("enabled")) {
        config.use_prefix_cache = cache["enabled"].get<bool>();
      }
      if (cache.contains("capacity")) {
        config.cache_capacity = cache["capacity"].get<std::size_t>();
      }
    }
    if (doc.contains("defaults")) {
      const auto& defaults = doc["defaults"];
      config.default_temperature =
          require_finite(defaults, "temperature", config.default_temperature);
      config.default_alpha =
          require_finite(defaults, "alpha", config.default_alpha);
      config.default_threshold =
          require_finite(defaults, "threshold", config.default_threshold);
    }
    if (doc.contains("listen")) {
      config.listen = doc["listen"].get<std::string>();
    }
    if (doc.contains("max_inline_bytes")) {
      config.max_inline_bytes = doc["max_inline_bytes"].get<std::size_t>();
    }
    if (doc.contains("url_fetch_timeout_ms")) {
      config.url_fetch_timeout_ms = doc["url_fetch_timeout_ms"].get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("service config: ") + e.what());
  }

  if (config.default_temperature <= 0.0) {
    throw Error(Errc::parse_error, "default temperature must be positive");
  }
  if (config.default_alpha < 0.0) {
    throw Error(Errc::parse_error, "default alpha must be nonnegative");
  }
  if (!std::isfinite(config.default_threshold) ||
      config.default_threshold < 0.0 || config.default_threshold > 1.0) {
    throw Error(Errc::parse_error, "default threshold must lie in [0, 1]");
  }
  return config;
}

PolicyRegistry make_registry(const ServiceConfig& config) {
  if (config.policy_file.empty()) {
    if (!config.include_builtins) {
      throw Error(Errc::empty_policy_set,
                  "no policy file and builtins disabled");
    }
    return PolicyRegistry::builtins();
  }
  return PolicyRegistry::with_document(read_text_file(config.policy_file),
                                       config.include_builtins);
}

std::shared_ptr<Backend> make_backend(const ServiceConfig& config,
                                      const PolicyRegistry& registry) {
  if (config.mock_manifest.has_value()) {
    return std::make_shared<MockBackend>(
        registry.policies(), MockBackend::load_rows(*config.mock_manifest),
        MockBackend::Options{});
  }
  if (config.http_backend.has_value()) {
    return std::make_shared<HttpBackend>(*config.http_backend);
  }
  throw Error(Errc::backend_unavailable, "no backend configured");
}

ModerationService::ModerationService(std::shared_ptr<ModerationEngine> engine,
                                     Options options)
    : engine_(std::move(engine)), options_(options) {}

std::string ModerationService::handle_policies() const {
  ordered_json out;
  out["policies"] = ordered_json::array();
  for (const Policy& policy : engine_->registry().policies()) {
    out["policies"].push_back({{"id", policy.id},
                               {"title", policy.title},
                               {"definition", policy.definition}});
  }
  return out.dump();
}

std::string ModerationService::handle_moderate(const std::string& body,
                                               std::string* error_code,
                                               int* status,
                                               ModerationStats* stats) {
  *status = 200;
  error_code->clear();

  ordered_json req;
  try {
    req = ordered_json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    *status = 400;
    *error_code = errc_name(Errc::invalid_request);
    return error_body(*error_code, std::string("request is not JSON: ") +
                                       e.what());
  }

  try {
    if (!req.is_object() || !req.contains("image") ||
        !req["image"].is_object()) {
      throw Error(Errc::invalid_request,
                  "request needs an 'image' object");
    }
    const auto& image_spec = req["image"];

    ImageRef image;
    if (image_spec.contains("bytes_b64")) {
      std::string bytes =
          base64_decode(image_spec["bytes_b64"].get<std::string>());
      if (bytes.size() > options_.max_inline_bytes) {
        throw Error(Errc::invalid_request,
                    "inline image exceeds the " +
                        std::to_string(options_.max_inline_bytes) +
                        "-byte cap");
      }
      image = ImageRef::from_bytes(std::move(bytes));
      if (image_spec.contains("digest") &&
          image_spec["digest"].get<std::string>() != image.digest) {
        throw Error(Errc::invalid_request,
                    "inline bytes do not match the supplied digest");
      }
    } else if (image_spec.contains("url")) {
      const std::string url = image_spec["url"].get<std::string>();
      std::string digest;
      if (image_spec.contains("digest")) {
        digest = image_spec["digest"].get<std::string>();
        if (!is_hex_digest(digest)) {
          throw Error(Errc::invalid_request,
                      "digest must be 64 lowercase hex characters");
        }
        // Digest given: hand the unfetched reference to the backend.
        image = ImageRef::from_url(url, digest);
      } else {
        // No digest: fetch now, the digest keys caching and mock tables.
        std::string bytes = fetch_url(url, options_.url_fetch_timeout_ms);
        image = ImageRef::from_bytes(std::move(bytes));
        image.kind = ImageSourceKind::remote_url;
        image.location = url;
      }
    } else if (image_spec.contains("digest")) {
      const std::string digest = image_spec["digest"].get<std::string>();
      if (!is_hex_digest(digest)) {
        throw Error(Errc::invalid_request,
                    "digest must be 64 lowercase hex characters");
      }
      image = ImageRef::from_digest(digest);
    } else {
      throw Error(Errc::invalid_request,
                  "image needs bytes_b64, url, or digest");
    }

    ModerationRequest request;
    if (req.contains("policies")) {
      if (!req["policies"].is_array() || req["policies"].empty()) {
        throw Error(Errc::invalid_request,
                    "'policies' must be a nonempty array");
      }
      for (const auto& entry : req["policies"]) {
        if (!entry.is_string()) {
          throw Error(Errc::invalid_request, "policy ids must be strings");
        }
        request.policy_ids.push_back(entry.get<std::string>());
      }
    } else {
      request.policy_ids = engine_->registry().ids();
    }
    // Unknown ids fail the whole request up front: 422, not a per-policy
    // error record.
    for (const auto& policy_id : request.policy_ids) {
      engine_->registry().at(policy_id);
    }

    if (req.contains("mode")) {
      request.mode = moderate_mode_from_string(req["mode"].get<std::string>());
    }

    request.scoring.temperature =
        require_finite(req, "temperature", options_.default_temperature);
    request.scoring.alpha = require_finite(req, "alpha", options_.default_alpha);
    if (request.scoring.temperature <= 0.0) {
      throw Error(Errc::invalid_request, "temperature must be positive");
    }
    if (request.scoring.alpha < 0.0) {
      throw Error(Errc::invalid_request, "alpha must be nonnegative");
    }

    request.default_threshold =
        require_finite(req, "threshold", options_.default_threshold);
    check_threshold_range(request.default_threshold, "threshold");
    if (req.contains("thresholds")) {
      if (!req["thresholds"].is_object()) {
        throw Error(Errc::invalid_request, "'thresholds' must be an object");
      }
      for (const auto& [policy_id, value] : req["thresholds"].items()) {
        if (!value.is_number()) {
          throw Error(Errc::invalid_request,
                      "threshold for '" + policy_id + "' must be a number");
        }
        double threshold = value.get<double>();
        check_threshold_range(threshold, "threshold for '" + policy_id + "'");
        request.policy_thresholds[policy_id] = threshold;
      }
    }

    std::vector<ModerationOutcome> outcomes =
        engine_->moderate_multi(image, request, stats);

    ordered_json out;
    out["backend"] = engine_->backend().name();
    out["mode"] = to_string(request.mode);
    out["results"] = ordered_json::array();
    bool all_errored = !outcomes.empty();
    std::string first_error_code;
    for (const ModerationOutcome& outcome : outcomes) {
      ordered_json record;
      record["policy"] = outcome.policy_id;
      if (outcome.error.has_value()) {
        record["error"] = *outcome.error;
        record["error_code"] = outcome.error_code.value_or("");
        if (first_error_code.empty()) {
          first_error_code = outcome.error_code.value_or("");
        }
      } else {
        all_errored = false;
        record["probability"] = outcome.verdict->probability;
        if (request.mode != ModerateMode::score) {
          record["threshold"] = outcome.verdict->threshold;
          record["violative"] = outcome.verdict->violative;
        }
        if (request.mode == ModerateMode::rationale) {
          if (outcome.rationale.has_value()) {
            record["rationale"] = {{"violative", outcome.rationale->yes},
                                   {"text", outcome.rationale->rationale}};
          } else {
            record["rationale_error"] =
                outcome.rationale_error.value_or("rationale unavailable");
          }
        }
      }
      out["results"].push_back(std::move(record));
    }

    if (all_errored) {
      // Nothing succeeded; surface the failure as the response status.
      *status = status_for_name(first_error_code);
      *error_code = first_error_code;
    }
    return out.dump();
  } catch (const Error& e) {
    *status = status_for(e.code());
    *error_code = e.code_name();
    return error_body(*error_code, e.what());
  } catch (const nlohmann::json::exception& e) {
    *status = 400;
    *error_code = errc_name(Errc::invalid_request);
    return error_body(*error_code, e.what());
  }
}

void ModerationService::attach(httplib::Server& server) {
  server.Post("/v1/moderate", [this](const httplib::Request& req,
                                     httplib::Response& res) {
    const auto start = std::chrono::steady_clock::now();
    std::string error_code;
    int status = 200;
    ModerationStats stats;
    std::string body = handle_moderate(req.body, &error_code, &status, &stats);
    const auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - start);

    res.status = status;
    // Instrumentation lives in headers: bodies stay byte-identical for
    // identical requests.
    res.set_header("X-Picket-Backend", engine_->backend().name());
    res.set_header("X-Picket-Prepares", std::to_string(stats.prepares));
    res.set_header("X-Picket-Scores", std::to_string(stats.scores));
    res.set_header("X-Picket-Cache-Hit", stats.cache_hit ? "1" : "0");
    res.set_header("X-Picket-Elapsed-Us", std::to_string(elapsed.count()));
    res.set_content(body, "application/json");
  });

  server.Get("/v1/policies", [this](const httplib::Request&,
                                    httplib::Response& res) {
    res.set_content(handle_policies(), "application/json");
  });

  server.Get("/healthz", [this](const httplib::Request&,
                                httplib::Response& res) {
    ordered_json j;
    j["status"] = "ok";
    j["backend"] = engine_->backend().name();
    res.set_content(j.dump(), "application/json");
  });
}

void ModerationService::run(const std::string& listen) {
  auto colon = listen.rfind(':');
  if (colon == std::string::npos || colon + 1 >= listen.size()) {
    throw Error(Errc::invalid_request,
                "listen address must be host:port, got '" + listen + "'");
  }
  const std::string host = listen.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(Errc::invalid_request,
                "listen port is not a number in '" + listen + "'");
  }

  httplib::Server server;
  attach(server);
  log_line(LogLevel::info, "listening on " + listen);
  if (!server.listen(host, port)) {
    throw Error(Errc::io_error, "cannot listen on " + listen);
  }
}

std::unique_ptr<ModerationService> make_service(const ServiceConfig& config) {
  PolicyRegistry registry = make_registry(config);
  std::shared_ptr<Backend> backend = make_backend(config, registry);

  EngineOptions engine_options;
  engine_options.style = config.style;
  engine_options.use_prefix_cache = config.use_prefix_cache;
  engine_options.cache_capacity = config.cache_capacity;
  auto engine = std::make_shared<ModerationEngine>(
      std::move(backend), std::move(registry), engine_options);

  ModerationService::Options options;
  options.default_temperature = config.default_temperature;
  options.default_alpha = config.default_alpha;
  options.default_threshold = config.default_threshold;
  options.max_inline_bytes = config.max_inline_bytes;
  options.url_fetch_timeout_ms = config.url_fetch_timeout_ms;
  return std::make_unique<ModerationService>(std::move(engine), options);
}

}  // namespace picket
