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

#include "picket/http_backend.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "picket/base64.hpp"
#include "picket/log.hpp"

namespace picket {
namespace {

using nlohmann::json;

constexpr std::string_view kPreparedIdTag = "id:";
constexpr std::string_view kInlineImageTag = "img:";

json image_to_json(const ImageRef& image) {
  json node;
  if (!image.digest.empty()) node["digest"] = image.digest;
  switch (image.kind) {
    case ImageSourceKind::remote_url:
      node["url"] = image.location;
      break;
    case ImageSourceKind::local_path:
    case ImageSourceKind::inline_bytes:
      if (!image.bytes.empty()) {
        node["bytes_b64"] = base64_encode(image.bytes);
      }
      break;
  }
  if (node.empty()) {
    throw Error(Errc::invalid_request,
                "image ref carries neither bytes, URL nor digest");
  }
  return node;
}

bool token_matches_candidate(std::string_view token,
                             std::string_view candidate) {
  while (!token.empty() &&
         std::isspace(static_cast<unsigned char>(token.front()))) {
    token.remove_prefix(1);
  }
  if (token.size() != candidate.size()) return false;
  for (std::size_t i = 0; i < token.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(token[i])) !=
        std::tolower(static_cast<unsigned char>(candidate[i]))) {
      return false;
    }
  }
  return true;
}

json parse_response_body(const std::string& body) {
  json parsed = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) {
    throw Error(Errc::malformed_response,
                "backend response is not valid JSON");
  }
  return parsed;
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)) {
  if (config_.base_url.empty()) {
    throw Error(Errc::backend_unavailable, "no backend URL configured");
  }
  if (!config_.auth_env_var.empty()) {
    if (const char* token = std::getenv(config_.auth_env_var.c_str())) {
      bearer_token_ = token;
    } else {
      log_line(LogLevel::error, "auth env var " + config_.auth_env_var +
                                    " is not set; sending no credentials");
    }
  }
  capabilities_ = config_.capabilities_override;
}

std::string HttpBackend::name() const {
  fetch_capabilities_once();
  std::lock_guard<std::mutex> lock(mu_);
  return remote_name_.empty() ? "http:" + config_.base_url : remote_name_;
}

BackendCapabilities HttpBackend::capabilities() const {
  fetch_capabilities_once();
  std::lock_guard<std::mutex> lock(mu_);
  return *capabilities_;
}

void HttpBackend::fetch_capabilities_once() const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (capabilities_.has_value()) return;
  }
  httplib::Client client(config_.base_url);
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  if (!bearer_token_.empty()) client.set_bearer_token_auth(bearer_token_);

  BackendCapabilities caps;
  std::string remote_name;
  auto res = client.Get("/v1/capabilities");
  if (res && res->status == 200) {
    json parsed = json::parse(res->body, nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object()) {
      caps.supports_first_token_logprobs =
          parsed.value("first_token_logprobs", false);
      caps.supports_prefix_cache = parsed.value("prefix_cache", false);
      caps.supports_rationale_mode = parsed.value("rationale", false);
      remote_name = parsed.value("name", "");
    }
  } else {
    // Older servers without the endpoint: assume the scoring path only.
    caps.supports_first_token_logprobs = true;
    log_line(LogLevel::info,
             "capabilities endpoint unavailable; assuming logprobs only");
  }
  std::lock_guard<std::mutex> lock(mu_);
  if (!capabilities_.has_value()) {
    capabilities_ = caps;
    remote_name_ = remote_name;
  }
}

std::string HttpBackend::post_json(const std::string& path,
                                   const std::string& body) {
  auto attempt = [&]() -> std::string {
    httplib::Client client(config_.base_url);
    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    if (!bearer_token_.empty()) client.set_bearer_token_auth(bearer_token_);

    auto res = client.Post(path, body, "application/json");
    if (!res) {
      const httplib::Error err = res.error();
      if (err == httplib::Error::ConnectionTimeout ||
          err == httplib::Error::Read || err == httplib::Error::Write) {
        throw Error(Errc::timeout,
                    "backend request timed out: " + httplib::to_string(err));
      }
      throw Error(Errc::backend_unavailable,
                  "backend unreachable: " + httplib::to_string(err));
    }
    if (res->status == 429 || res->status >= 500) {
      throw Error(Errc::backend_unavailable,
                  "backend returned HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
      throw Error(Errc::malformed_response,
                  "backend returned HTTP " + std::to_string(res->status) +
                      ": " + res->body.substr(0, 200));
    }
    return res->body;
  };
  return with_retries(config_.retry, attempt);
}

std::shared_ptr<const PreparedImage> HttpBackend::do_prepare(
    const ImageRef& image, std::string_view preamble) {
  auto prepared = std::make_shared<PreparedImage>();
  prepared->digest = image.digest;
  prepared->preamble_sha256 = sha256_hex(preamble);

  const json image_node = image_to_json(image);
  if (capabilities().supports_prefix_cache) {
    json request{{"image", image_node},
                 {"preamble", std::string(preamble)}};
    const json response =
        parse_response_body(post_json("/v1/prepare", request.dump()));
    if (!response.is_object() || !response.contains("prepared_id") ||
        !response["prepared_id"].is_string()) {
      throw Error(Errc::malformed_response,
                  "prepare response lacks a string 'prepared_id'");
    }
    prepared->handle = std::string(kPreparedIdTag) +
                       response["prepared_id"].get<std::string>();
  } else {
    // No server-side preparation: carry the payload so each scoring call can
    // resend it.
    prepared->handle = std::string(kInlineImageTag) + image_node.dump();
  }
  return prepared;
}

TokenLikelihoods HttpBackend::do_score(const PreparedImage& prepared,
                                       std::string_view prompt,
                                       const CandidatePair& candidates) {
  json request{{"prompt", std::string(prompt)},
               {"candidates", {candidates.yes, candidates.no}}};
  if (prepared.handle.rfind(kPreparedIdTag, 0) == 0) {
    request["prepared_id"] =
        prepared.handle.substr(kPreparedIdTag.size());
  } else if (prepared.handle.rfind(kInlineImageTag, 0) == 0) {
    request["image"] =
        json::parse(prepared.handle.substr(kInlineImageTag.size()));
  } else {
    throw Error(Errc::invalid_request, "prepared image has no usable handle");
  }

  const json response =
      parse_response_body(post_json("/v1/score_first_token", request.dump()));
  if (!response.is_object() || !response.contains("first_token_logprobs") ||
      !response["first_token_logprobs"].is_array()) {
    throw Error(Errc::malformed_response,
                "score response lacks 'first_token_logprobs'");
  }

  // A candidate may resolve to several token variants (case, leading
  // whitespace); keep the most likely one.
  std::optional<double> ll_yes;
  std::optional<double> ll_no;
  for (const json& entry : response["first_token_logprobs"]) {
    if (!entry.is_object() || !entry.contains("token") ||
        !entry["token"].is_string() || !entry.contains("logprob") ||
        !entry["logprob"].is_number()) {
      throw Error(Errc::malformed_response,
                  "malformed first_token_logprobs entry");
    }
    const std::string token = entry["token"].get<std::string>();
    const double logprob = entry["logprob"].get<double>();
    if (token_matches_candidate(token, candidates.yes)) {
      ll_yes = ll_yes ? std::max(*ll_yes, logprob) : logprob;
    } else if (token_matches_candidate(token, candidates.no)) {
      ll_no = ll_no ? std::max(*ll_no, logprob) : logprob;
    }
  }
  if (!ll_yes || !ll_no) {
    throw Error(Errc::malformed_response,
                "response does not score both candidate tokens");
  }
  return TokenLikelihoods{*ll_yes, *ll_no};
}

std::string HttpBackend::do_generate(const PreparedImage& prepared,
                                     std::string_view prompt) {
  json request{{"prompt", std::string(prompt)}};
  if (prepared.handle.rfind(kPreparedIdTag, 0) == 0) {
    request["prepared_id"] =
        prepared.handle.substr(kPreparedIdTag.size());
  } else if (prepared.handle.rfind(kInlineImageTag, 0) == 0) {
    request["image"] =
        json::parse(prepared.handle.substr(kInlineImageTag.size()));
  }
  const json response =
      parse_response_body(post_json("/v1/generate", request.dump()));
  if (!response.is_object() || !response.contains("text") ||
      !response["text"].is_string()) {
    throw Error(Errc::malformed_response,
                "generate response lacks a string 'text'");
  }
  return response["text"].get<std::string>();
}

}  // namespace picket
