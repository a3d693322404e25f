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

#include "picket/mock_backend.hpp"

#include <fstream>

#include "picket/manifest.hpp"

namespace picket {
namespace {

TokenLikelihoods pair_from_json(const nlohmann::ordered_json& node,
                                std::size_t line) {
  if (!node.is_array() || node.size() != 2 || !node[0].is_number() ||
      !node[1].is_number()) {
    throw Error(Errc::parse_error,
                "mock manifest line " + std::to_string(line) +
                    ": likelihood entry must be [ll_yes, ll_no]");
  }
  return TokenLikelihoods{node[0].get<double>(), node[1].get<double>()};
}

}  // namespace

MockBackend::MockBackend(std::vector<Policy> policies, Options options)
    : MockBackend(std::move(policies), {}, options) {}

MockBackend::MockBackend(std::vector<Policy> policies,
                         std::map<std::string, Row> rows, Options options)
    : policies_(std::move(policies)),
      options_(options),
      rows_(std::move(rows)) {
  policy_blocks_.reserve(policies_.size());
  for (const Policy& policy : policies_) {
    policy_blocks_.push_back(render_policy_block(policy));
  }
}

std::map<std::string, MockBackend::Row> MockBackend::load_rows(
    const std::filesystem::path& path) {
  std::map<std::string, Row> rows;
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::io_error, "cannot open mock manifest " + path.string());
  }
  for_each_record(in, [&](std::size_t line,
                          const nlohmann::ordered_json& record) {
    if (!record.is_object() || !record.contains("digest") ||
        !record["digest"].is_string()) {
      throw Error(Errc::parse_error,
                  "mock manifest line " + std::to_string(line) +
                      ": row must carry a string 'digest'");
    }
    const std::string digest = record["digest"].get<std::string>();
    if (!is_hex_digest(digest)) {
      throw Error(Errc::parse_error,
                  "mock manifest line " + std::to_string(line) +
                      ": digest must be 64 lowercase hex characters");
    }
    Row row;
    if (record.contains("policies")) {
      if (!record["policies"].is_object()) {
        throw Error(Errc::parse_error,
                    "mock manifest line " + std::to_string(line) +
                        ": 'policies' must be an object");
      }
      for (const auto& [policy_id, pair] : record["policies"].items()) {
        row.per_policy[policy_id] = pair_from_json(pair, line);
      }
    }
    if (record.contains("default")) {
      row.fallback = pair_from_json(record["default"], line);
    }
    if (record.contains("text")) {
      if (!record["text"].is_string()) {
        throw Error(Errc::parse_error,
                    "mock manifest line " + std::to_string(line) +
                        ": 'text' must be a string");
      }
      row.text = record["text"].get<std::string>();
    }
    rows[digest] = std::move(row);
  });
  return rows;
}

MockBackend MockBackend::from_manifest(const std::filesystem::path& path,
                                       std::vector<Policy> policies,
                                       Options options) {
  return MockBackend(std::move(policies), load_rows(path), options);
}

void MockBackend::set_row(const std::string& digest, Row row) {
  rows_[digest] = std::move(row);
}

void MockBackend::set_likelihoods(const std::string& digest,
                                  const std::string& policy_id,
                                  TokenLikelihoods lk) {
  rows_[digest].per_policy[policy_id] = lk;
}

void MockBackend::set_default_likelihoods(const std::string& digest,
                                          TokenLikelihoods lk) {
  rows_[digest].fallback = lk;
}

void MockBackend::set_text(const std::string& digest, std::string text) {
  rows_[digest].text = std::move(text);
}

void MockBackend::reset_counters() {
  prepare_count_.store(0);
  score_count_.store(0);
}

const MockBackend::Row* MockBackend::find_row(
    const std::string& digest) const {
  auto it = rows_.find(digest);
  return it == rows_.end() ? nullptr : &it->second;
}

const std::string* MockBackend::policy_for_prompt(
    std::string_view prompt) const {
  for (std::size_t i = 0; i < policies_.size(); ++i) {
    if (prompt.find(policy_blocks_[i]) != std::string_view::npos) {
      return &policies_[i].id;
    }
  }
  return nullptr;
}

std::shared_ptr<const PreparedImage> MockBackend::do_prepare(
    const ImageRef& image, std::string_view preamble) {
  if (image.digest.empty()) {
    throw Error(Errc::invalid_request, "image ref carries no digest");
  }
  prepare_count_.fetch_add(1);
  auto prepared = std::make_shared<PreparedImage>();
  prepared->digest = image.digest;
  prepared->preamble_sha256 = sha256_hex(preamble);
  return prepared;
}

TokenLikelihoods MockBackend::do_score(const PreparedImage& prepared,
                                       std::string_view prompt,
                                       const CandidatePair&) {
  score_count_.fetch_add(1);
  const Row* row = find_row(prepared.digest);
  if (row == nullptr) {
    if (options_.strict) {
      throw Error(Errc::malformed_response,
                  "mock table has no row for digest " + prepared.digest);
    }
    return options_.default_likelihoods;
  }
  if (const std::string* policy_id = policy_for_prompt(prompt)) {
    auto it = row->per_policy.find(*policy_id);
    if (it != row->per_policy.end()) return it->second;
  }
  if (row->fallback.has_value()) return *row->fallback;
  if (options_.strict) {
    throw Error(Errc::malformed_response,
                "mock table row for digest " + prepared.digest +
                    " has no entry matching the prompt");
  }
  return options_.default_likelihoods;
}

std::string MockBackend::do_generate(const PreparedImage& prepared,
                                     std::string_view) {
  const Row* row = find_row(prepared.digest);
  if (row != nullptr && row->text.has_value()) return *row->text;
  if (options_.strict && row == nullptr) {
    throw Error(Errc::malformed_response,
                "mock table has no row for digest " + prepared.digest);
  }
  return "No. The mock table provides no rationale for this image.";
}

}  // namespace picket
