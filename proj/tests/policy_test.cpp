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

#include <fstream>
#include <functional>
#include <sstream>

#include <gtest/gtest.h>

namespace picket {
namespace {

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in) << "missing fixture " << path;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Errc thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::parse_error;
}

TEST(BuiltinPolicies, ThreeEntriesWithStableIds) {
  const auto& builtins = builtin_policies();
  ASSERT_EQ(builtins.size(), 3u);
  EXPECT_EQ(builtins[0].id, "sexual");
  EXPECT_EQ(builtins[0].title, "No Sexually Explicit Information");
  EXPECT_EQ(builtins[1].id, "danger");
  EXPECT_EQ(builtins[1].title, "No Dangerous Content");
  EXPECT_EQ(builtins[2].id, "violence");
  EXPECT_EQ(builtins[2].title, "No Violence/Gore Content");
  for (const Policy& policy : builtins) {
    EXPECT_FALSE(policy.definition.empty());
    EXPECT_NO_THROW(validate_policy(policy));
  }
}

TEST(RenderPrompt, MatchesGoldenBytesDefaultStyle) {
  const Policy sexual = builtin_policies()[0];
  const std::string expected =
      read_bytes(std::string(PICKET_DATA_DIR) +
                 "/golden/prompt_shieldgemma2_sexual.txt");
  EXPECT_EQ(render_prompt(sexual, PromptStyle::shieldgemma2), expected);
}

TEST(RenderPrompt, MatchesGoldenBytesAlternateStyle) {
  const Policy sexual = builtin_policies()[0];
  const std::string expected = read_bytes(
      std::string(PICKET_DATA_DIR) + "/golden/prompt_llavaguard_sexual.txt");
  EXPECT_EQ(render_prompt(sexual, PromptStyle::llavaguard), expected);
}

TEST(RenderPrompt, SharedPrefixIsAPrefixOfEveryPrompt) {
  for (PromptStyle style :
       {PromptStyle::shieldgemma2, PromptStyle::llavaguard}) {
    const std::string prefix = prompt_shared_prefix(style);
    ASSERT_FALSE(prefix.empty());
    for (const Policy& policy : builtin_policies()) {
      const std::string prompt = render_prompt(policy, style);
      ASSERT_GE(prompt.size(), prefix.size());
      EXPECT_EQ(prompt.substr(0, prefix.size()), prefix);
    }
  }
}

TEST(RenderPrompt, ContainsDelimitedBlock) {
  const Policy danger = builtin_policies()[1];
  const std::string prompt = render_prompt(danger, PromptStyle::shieldgemma2);
  const std::string block = render_policy_block(danger);
  EXPECT_EQ(block, "\"No Dangerous Content\": " + danger.definition);
  EXPECT_NE(prompt.find(kPolicyBeginDelimiter), std::string::npos);
  EXPECT_NE(prompt.find(kPolicyEndDelimiter), std::string::npos);
  EXPECT_NE(prompt.find(block), std::string::npos);
}

TEST(RenderPrompt, PolicyBlocksAreDisjointAcrossBuiltins) {
  for (PromptStyle style :
       {PromptStyle::shieldgemma2, PromptStyle::llavaguard}) {
    for (const Policy& outer : builtin_policies()) {
      const std::string prompt = render_prompt(outer, style);
      for (const Policy& inner : builtin_policies()) {
        if (inner.id == outer.id) continue;
        EXPECT_EQ(prompt.find(render_policy_block(inner)), std::string::npos);
      }
    }
  }
}

TEST(ValidatePolicy, RejectsBadShapes) {
  Policy p{"x", "Title", "Definition.", false};
  EXPECT_NO_THROW(validate_policy(p));

  Policy empty_id = p;
  empty_id.id = "";
  EXPECT_EQ(thrown_code([&] { validate_policy(empty_id); }),
            Errc::invalid_policy);

  Policy empty_def = p;
  empty_def.definition = "";
  EXPECT_EQ(thrown_code([&] { validate_policy(empty_def); }),
            Errc::invalid_policy);

  Policy delim_def = p;
  delim_def.definition = "x" + std::string(kPolicyBeginDelimiter) + "y";
  EXPECT_EQ(thrown_code([&] { validate_policy(delim_def); }),
            Errc::invalid_policy);

  Policy delim_title = p;
  delim_title.title = std::string(kPolicyEndDelimiter);
  EXPECT_EQ(thrown_code([&] { validate_policy(delim_title); }),
            Errc::invalid_policy);
}

TEST(RenderPrompt, RefusesInvalidPolicy) {
  Policy bad{"x", "T", "", false};
  EXPECT_EQ(thrown_code([&] {
              render_prompt(bad, PromptStyle::shieldgemma2);
            }),
            Errc::invalid_policy);
}

TEST(LoadPolicies, ParsesArrayAndObjectForms) {
  const char* array_doc = R"([
    {"id": "a", "title": "A", "definition": "Def A."},
    {"id": "b", "title": "B", "definition": "Def B."}
  ])";
  auto from_array = load_policies(array_doc);
  ASSERT_EQ(from_array.size(), 2u);
  EXPECT_EQ(from_array[0].id, "a");
  EXPECT_EQ(from_array[1].definition, "Def B.");

  const char* object_doc =
      R"({"policies": [{"id": "c", "title": "C", "definition": "Def C."}]})";
  auto from_object = load_policies(object_doc);
  ASSERT_EQ(from_object.size(), 1u);
  EXPECT_EQ(from_object[0].id, "c");
}

TEST(LoadPolicies, EmptyDocumentsYieldNoPolicies) {
  EXPECT_TRUE(load_policies("").empty());
  EXPECT_TRUE(load_policies("  \n\t ").empty());
}

TEST(LoadPolicies, RejectsDuplicatesAndGarbage) {
  const char* dup = R"([
    {"id": "a", "title": "A", "definition": "D."},
    {"id": "a", "title": "A2", "definition": "D2."}
  ])";
  EXPECT_EQ(thrown_code([&] { load_policies(dup); }), Errc::duplicate_id);
  EXPECT_EQ(thrown_code([] { load_policies("not json"); }),
            Errc::parse_error);
  EXPECT_EQ(thrown_code([] { load_policies("{\"x\": 1}"); }),
            Errc::parse_error);
}

TEST(PolicyRegistry, BuiltinsPlusCustoms) {
  PolicyRegistry registry = PolicyRegistry::builtins();
  EXPECT_EQ(registry.size(), 3u);
  EXPECT_NE(registry.find("sexual"), nullptr);
  EXPECT_EQ(registry.find("spam"), nullptr);
  EXPECT_EQ(thrown_code([&] { registry.at("spam"); }), Errc::unknown_policy);

  registry.add({"spam", "No Spam", "The image shall not contain spam.",
                false});
  EXPECT_EQ(registry.size(), 4u);
  EXPECT_EQ(registry.at("spam").title, "No Spam");
}

TEST(PolicyRegistry, CollisionNeedsOverride) {
  PolicyRegistry registry = PolicyRegistry::builtins();
  Policy clash{"sexual", "Other", "Other definition.", false};
  EXPECT_EQ(thrown_code([&] { registry.add(clash); }), Errc::duplicate_id);

  clash.override_builtin = true;
  registry.add(clash);
  EXPECT_EQ(registry.size(), 3u);
  EXPECT_EQ(registry.at("sexual").title, "Other");
}

TEST(PolicyRegistry, WithDocumentControlsBuiltins) {
  const char* doc =
      R"([{"id": "custom", "title": "C", "definition": "Def."}])";
  PolicyRegistry both = PolicyRegistry::with_document(doc, true);
  EXPECT_EQ(both.size(), 4u);
  PolicyRegistry only = PolicyRegistry::with_document(doc, false);
  EXPECT_EQ(only.size(), 1u);
  EXPECT_EQ(only.ids(), std::vector<std::string>{"custom"});
}

}  // namespace
}  // namespace picket
