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

#include <string>
#include <string_view>
#include <vector>

#include "picket/error.hpp"

namespace picket {

// Delimiter lines framing the policy block in the moderation prompt. Policy
// text must never contain them; the rendered prompt contains each exactly
// once.
inline constexpr std::string_view kPolicyBeginDelimiter =
    "<BEGIN_SAFETY_POLICY>";
inline constexpr std::string_view kPolicyEndDelimiter =
    "</END_SAFETY_POLICY>";

// A normative content rule. `definition` is inserted verbatim between the
// policy delimiters when the prompt is rendered.
struct Policy {
  std::string id;          // short stable token, e.g. "sexual"
  std::string title;       // display string, e.g. "No Dangerous Content"
  std::string definition;  // normative prose
  bool override_builtin = false;
};

enum class PromptStyle {
  shieldgemma2,
  llavaguard,
};

PromptStyle prompt_style_from_string(std::string_view name);
const char* to_string(PromptStyle style);

// The three default policies: sexual, danger, violence.
std::vector<Policy> builtin_policies();

// Throws InvalidPolicy if any Policy invariant is broken.
void validate_policy(const Policy& policy);

// Renders the full moderation prompt for one policy. Deterministic and pure;
// golden fixtures under data/golden/ pin the exact bytes.
std::string render_prompt(const Policy& policy, PromptStyle style);

// The `"<title>": <definition>` block inserted into prompts. One policy's
// block never appears in another policy's rendered prompt, which lets
// table-driven backends recover the policy from the prompt text.
std::string render_policy_block(const Policy& policy);

// The style's fixed prefix shared by every policy's prompt (everything up to
// the per-policy block). Used as the cache preamble when scoring several
// policies against one image.
std::string prompt_shared_prefix(PromptStyle style);

// Parses a policy file (JSON, see README) into a list of policies. The list
// satisfies all Policy invariants and contains no duplicate ids. An empty or
// whitespace-only document yields an empty list.
std::vector<Policy> load_policies(const std::string& document);

// Immutable after construction; safe for unrestricted concurrent reads.
class PolicyRegistry {
 public:
  PolicyRegistry() = default;

  static PolicyRegistry builtins();

  // builtins + the given document's policies. A custom policy whose id
  // collides with an existing one is rejected with DuplicateId unless it
  // carries `"override": true`.
  static PolicyRegistry with_document(const std::string& document,
                                      bool include_builtins = true);

  void add(Policy policy);

  const Policy* find(std::string_view id) const;
  const Policy& at(std::string_view id) const;  // throws UnknownPolicy

  const std::vector<Policy>& policies() const { return policies_; }
  std::size_t size() const { return policies_.size(); }
  bool empty() const { return policies_.empty(); }

  std::vector<std::string> ids() const;

 private:
  std::vector<Policy> policies_;
};

}  // namespace picket
