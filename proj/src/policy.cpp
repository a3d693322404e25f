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

#include "picket/policy.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

namespace picket {
namespace {

using nlohmann::json;

constexpr std::string_view kShieldPreamble =
    "You are a policy expert trying to help determine whether a generated or "
    "real image is in violation of the safety policy below. Your decision "
    "must very clearly follow the specific language used in the safety "
    "policy and should not include any interpretation outside of the safety "
    "policy.\n<BEGIN_SAFETY_POLICY>\n";

constexpr std::string_view kShieldSuffix =
    "\n</END_SAFETY_POLICY>\nDoes the image violate the above policy? Your "
    "Answer must start with 'Yes' or 'No'.";

constexpr std::string_view kLlavaPreamble =
    "Provide a safety assessment for the content provided by the user. "
    "Determine compliance or violation against our safety policy by "
    "reviewing the following policy categories:\n\n";

constexpr std::string_view kLlavaSuffix =
    "\n\nAssessment Steps:\n\n"
    "1. Select a safety \"rating\". This should be \"Unsafe\" if the content "
    "violates the safety policy; otherwise, it should be \"Safe\".\n\n"
    "2. Assign a policy \"category\". If none of the policy categories are "
    "applicable, select \"NA: None applying\".\n\n"
    "3. Provide a \"rationale\". Explain the reason why the content is "
    "considered safe or unsafe, referring to the description of the assigned "
    "policy category.\n\n"
    "To provide your assessment use the following json template:\n"
    "{\n"
    "    \"rating\": str<\"Unsafe\"|\"Safe\">,\n"
    "    \"image-category\": str<\"O1: Hate, Humiliation, Harassment\"|\n"
    "    \"O2: Violence, Harm or Cruelty\"|\"O3: Sexual Content\"|\n"
    "    \"O4: Nudity Content\"|\"O5: Criminal Planning\"|\n"
    "    \"O6: Weapons or Substance Abuse\"|\"O7: Self-Harm\"|\n"
    "    \"O8: Animal Cruelty\"|\"O9: Disasters or Emergencies\"|\n"
    "    \"NA: None applying\">,\n"
    "    \"rationale\": str,\n"
    "}\n\n"
    "<image>";

bool is_blank(const std::string& text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

Policy policy_from_json(const json& node) {
  if (!node.is_object()) {
    throw Error(Errc::parse_error, "policy entry must be an object");
  }
  Policy policy;
  if (!node.contains("id") || !node["id"].is_string()) {
    throw Error(Errc::parse_error, "policy entry missing string field 'id'");
  }
  policy.id = node["id"].get<std::string>();
  if (node.contains("title")) {
    if (!node["title"].is_string()) {
      throw Error(Errc::parse_error, "policy field 'title' must be a string");
    }
    policy.title = node["title"].get<std::string>();
  }
  if (!node.contains("definition") || !node["definition"].is_string()) {
    throw Error(Errc::parse_error,
                "policy entry missing string field 'definition'");
  }
  policy.definition = node["definition"].get<std::string>();
  if (node.contains("override")) {
    if (!node["override"].is_boolean()) {
      throw Error(Errc::parse_error,
                  "policy field 'override' must be a boolean");
    }
    policy.override_builtin = node["override"].get<bool>();
  }
  return policy;
}

}  // namespace

PromptStyle prompt_style_from_string(std::string_view name) {
  if (name == "shieldgemma2") return PromptStyle::shieldgemma2;
  if (name == "llavaguard") return PromptStyle::llavaguard;
  throw Error(Errc::unknown_style,
              "unknown prompt style: " + std::string(name));
}

const char* to_string(PromptStyle style) {
  switch (style) {
    case PromptStyle::shieldgemma2: return "shieldgemma2";
    case PromptStyle::llavaguard: return "llavaguard";
  }
  return "?";
}

std::vector<Policy> builtin_policies() {
  return {
      Policy{
          "sexual",
          "No Sexually Explicit Information",
          "The image shall not contain content that depicts explicit or "
          "graphic sexual acts (e.g., pornography, erotic nudity, depictions "
          "of rape or sexual assault).",
      },
      Policy{
          "danger",
          "No Dangerous Content",
          "The image shall not contain content that facilitates or "
          "encourages activities that could cause real-world harm (e.g., "
          "building firearms and explosive devices, promotion of terrorism, "
          "instructions for suicide).",
      },
      Policy{
          "violence",
          "No Violence/Gore Content",
          "The image shall not contain content that depicts shocking, "
          "sensational, or gratuitous violence (e.g., excessive blood and "
          "gore, gratuitous violence against animals, extreme injury or "
          "moment of death).",
      },
  };
}

void validate_policy(const Policy& policy) {
  if (policy.id.empty()) {
    throw Error(Errc::invalid_policy, "policy id must be nonempty");
  }
  if (policy.definition.empty()) {
    throw Error(Errc::invalid_policy,
                "policy '" + policy.id + "' has an empty definition");
  }
  for (std::string_view delimiter :
       {kPolicyBeginDelimiter, kPolicyEndDelimiter}) {
    if (policy.definition.find(delimiter) != std::string::npos ||
        policy.title.find(delimiter) != std::string::npos) {
      throw Error(Errc::invalid_policy,
                  "policy '" + policy.id + "' contains the delimiter '" +
                      std::string(delimiter) + "'");
    }
  }
}

std::string render_policy_block(const Policy& policy) {
  std::string block;
  block.reserve(policy.title.size() + policy.definition.size() + 4);
  block.push_back('"');
  block.append(policy.title);
  block.append("\": ");
  block.append(policy.definition);
  return block;
}

std::string render_prompt(const Policy& policy, PromptStyle style) {
  validate_policy(policy);
  std::string prompt;
  switch (style) {
    case PromptStyle::shieldgemma2:
      prompt.append(kShieldPreamble);
      prompt.append(render_policy_block(policy));
      prompt.append(kShieldSuffix);
      return prompt;
    case PromptStyle::llavaguard:
      prompt.append(kLlavaPreamble);
      prompt.append(render_policy_block(policy));
      prompt.append(kLlavaSuffix);
      return prompt;
  }
  throw Error(Errc::unknown_style, "unhandled prompt style");
}

std::string prompt_shared_prefix(PromptStyle style) {
  switch (style) {
    case PromptStyle::shieldgemma2: return std::string(kShieldPreamble);
    case PromptStyle::llavaguard: return std::string(kLlavaPreamble);
  }
  throw Error(Errc::unknown_style, "unhandled prompt style");
}

std::vector<Policy> load_policies(const std::string& document) {
  if (document.empty() || is_blank(document)) {
    return {};
  }
  json root;
  try {
    root = json::parse(document);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error,
                std::string("policy file is not valid JSON: ") + e.what());
  }

  const json* entries = nullptr;
  if (root.is_array()) {
    entries = &root;
  } else if (root.is_object() && root.contains("policies") &&
             root["policies"].is_array()) {
    entries = &root["policies"];
  } else {
    throw Error(Errc::parse_error,
                "policy file must be an array or {\"policies\": [...]}");
  }

  std::vector<Policy> policies;
  policies.reserve(entries->size());
  for (const json& node : *entries) {
    Policy policy = policy_from_json(node);
    validate_policy(policy);
    for (const Policy& seen : policies) {
      if (seen.id == policy.id) {
        throw Error(Errc::duplicate_id,
                    "duplicate policy id '" + policy.id + "' in file");
      }
    }
    policies.push_back(std::move(policy));
  }
  return policies;
}

PolicyRegistry PolicyRegistry::builtins() {
  PolicyRegistry registry;
  for (Policy& policy : builtin_policies()) {
    registry.add(std::move(policy));
  }
  return registry;
}

PolicyRegistry PolicyRegistry::with_document(const std::string& document,
                                             bool include_builtins) {
  PolicyRegistry registry =
      include_builtins ? builtins() : PolicyRegistry{};
  for (Policy& policy : load_policies(document)) {
    registry.add(std::move(policy));
  }
  return registry;
}

void PolicyRegistry::add(Policy policy) {
  validate_policy(policy);
  auto existing = std::find_if(
      policies_.begin(), policies_.end(),
      [&](const Policy& seen) { return seen.id == policy.id; });
  if (existing != policies_.end()) {
    if (!policy.override_builtin) {
      throw Error(Errc::duplicate_id,
                  "policy id '" + policy.id +
                      "' already registered (set \"override\": true to "
                      "replace it)");
    }
    *existing = std::move(policy);
    return;
  }
  policies_.push_back(std::move(policy));
}

const Policy* PolicyRegistry::find(std::string_view id) const {
  for (const Policy& policy : policies_) {
    if (policy.id == id) return &policy;
  }
  return nullptr;
}

const Policy& PolicyRegistry::at(std::string_view id) const {
  const Policy* policy = find(id);
  if (policy == nullptr) {
    throw Error(Errc::unknown_policy,
                "no policy registered with id '" + std::string(id) + "'");
  }
  return *policy;
}

std::vector<std::string> PolicyRegistry::ids() const {
  std::vector<std::string> out;
  out.reserve(policies_.size());
  for (const Policy& policy : policies_) out.push_back(policy.id);
  return out;
}

}  // namespace picket
