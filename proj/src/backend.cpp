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

#include "picket/backend.hpp"

#include <cctype>
#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>

#include "picket/log.hpp"

namespace picket {
namespace {

std::string_view trim_left(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
    text.remove_prefix(1);
  }
  return text;
}

bool iequals_prefix(std::string_view text, std::string_view word) {
  if (text.size() < word.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[i])) !=
        std::tolower(static_cast<unsigned char>(word[i]))) {
      return false;
    }
  }
  // The label must end at a word boundary ("Yes.", "No,", "yes the ...").
  if (text.size() > word.size()) {
    const unsigned char next = static_cast<unsigned char>(text[word.size()]);
    if (std::isalnum(next)) return false;
  }
  return true;
}

std::string_view strip_label_leadin(std::string_view rest) {
  while (!rest.empty()) {
    const unsigned char c = static_cast<unsigned char>(rest.front());
    if (std::isspace(c) || c == '.' || c == ',' || c == ':' || c == ';' ||
        c == '-') {
      rest.remove_prefix(1);
    } else {
      break;
    }
  }
  return rest;
}

}  // namespace

RationaleResult parse_rationale(std::string_view raw) {
  // Structured object first.
  const std::size_t open = raw.find('{');
  if (open != std::string_view::npos) {
    const std::size_t close = raw.rfind('}');
    if (close != std::string_view::npos && close > open) {
      const std::string body(raw.substr(open, close - open + 1));
      nlohmann::json parsed =
          nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
      if (parsed.is_object() && parsed.contains("label") &&
          parsed["label"].is_string() && parsed.contains("rationale") &&
          parsed["rationale"].is_string()) {
        const std::string label = parsed["label"].get<std::string>();
        const std::string_view trimmed = trim_left(label);
        if (iequals_prefix(trimmed, "yes") || iequals_prefix(trimmed, "no")) {
          RationaleResult result;
          result.yes = iequals_prefix(trimmed, "yes");
          result.rationale = parsed["rationale"].get<std::string>();
          return result;
        }
        throw Error(Errc::unparseable_output,
                    "structured label is neither Yes nor No: '" + label + "'");
      }
    }
  }

  const std::string_view text = trim_left(raw);
  for (const auto& [word, value] :
       {std::pair<std::string_view, bool>{"yes", true}, {"no", false}}) {
    if (iequals_prefix(text, word)) {
      RationaleResult result;
      result.yes = value;
      result.rationale =
          std::string(strip_label_leadin(text.substr(word.size())));
      return result;
    }
  }
  throw Error(Errc::unparseable_output,
              "completion does not start with Yes or No");
}

std::shared_ptr<const PreparedImage> Backend::prepare(
    const ImageRef& image, std::string_view preamble) {
  auto prepared = do_prepare(image, preamble);
  log_line(LogLevel::debug, "prepare backend=" + name() +
                                " digest=" + image.digest +
                                " preamble_sha256=" +
                                prepared->preamble_sha256.substr(0, 16));
  return prepared;
}

TokenLikelihoods Backend::score_first_token(const PreparedImage& prepared,
                                            std::string_view prompt,
                                            const CandidatePair& candidates) {
  if (!capabilities().supports_first_token_logprobs) {
    throw Error(Errc::capability_missing,
                "backend '" + name() +
                    "' does not expose first-token log-probabilities");
  }
  TokenLikelihoods lk = do_score(prepared, prompt, candidates);
  if (!std::isfinite(lk.ll_yes) || !std::isfinite(lk.ll_no)) {
    throw Error(Errc::malformed_response,
                "backend returned non-finite log-likelihoods");
  }
  log_line(LogLevel::info,
           "score backend=" + name() + " digest=" + prepared.digest +
               " prompt_sha256=" + sha256_hex(prompt).substr(0, 16) +
               " ll_yes=" + std::to_string(lk.ll_yes) +
               " ll_no=" + std::to_string(lk.ll_no));
  return lk;
}

TokenLikelihoods Backend::score_first_token(const ImageRef& image,
                                            std::string_view prompt,
                                            const CandidatePair& candidates) {
  return score_first_token(*prepare(image, ""), prompt, candidates);
}

RationaleResult Backend::generate_rationale(const PreparedImage& prepared,
                                            std::string_view prompt) {
  if (!capabilities().supports_rationale_mode) {
    throw Error(Errc::capability_missing,
                "backend '" + name() + "' does not support rationale mode");
  }
  const std::string raw = do_generate(prepared, prompt);
  log_line(LogLevel::info,
           "generate backend=" + name() + " digest=" + prepared.digest +
               " prompt_sha256=" + sha256_hex(prompt).substr(0, 16) +
               " bytes=" + std::to_string(raw.size()));
  return parse_rationale(raw);
}

RationaleResult Backend::generate_rationale(const ImageRef& image,
                                            std::string_view prompt) {
  return generate_rationale(*prepare(image, ""), prompt);
}

void retry_sleep(const RetryPolicy& policy, std::chrono::milliseconds delay) {
  if (policy.sleeper) {
    policy.sleeper(delay);
  } else {
    std::this_thread::sleep_for(delay);
  }
}

}  // namespace picket
