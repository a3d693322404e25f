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

#include "picket/moderate.hpp"

#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "picket/image_ref.hpp"
#include "picket/mock_backend.hpp"

namespace picket {
namespace {

std::shared_ptr<MockBackend> table_backend(const ImageRef& image) {
  auto backend = std::make_shared<MockBackend>(builtin_policies());
  backend->set_likelihoods(image.digest, "sexual", {-0.1, -2.3});
  backend->set_likelihoods(image.digest, "danger", {-3.0, -0.2});
  backend->set_likelihoods(image.digest, "violence", {-1.0, -1.0});
  return backend;
}

ModerationRequest all_policies_request() {
  ModerationRequest request;
  request.policy_ids = {"sexual", "danger", "violence"};
  return request;
}

TEST(ModerationEngine, OnePrepareServesAllPoliciesWhenCaching) {
  const ImageRef image = ImageRef::from_bytes("image-1");
  auto backend = table_backend(image);
  ModerationEngine engine(backend, PolicyRegistry::builtins());

  ModerationStats stats;
  auto outcomes = engine.moderate_multi(image, all_policies_request(), &stats);
  ASSERT_EQ(outcomes.size(), 3u);
  EXPECT_EQ(stats.prepares, 1u);
  EXPECT_EQ(stats.scores, 3u);
  EXPECT_FALSE(stats.cache_hit);
  EXPECT_EQ(backend->prepare_count(), 1u);
  EXPECT_EQ(backend->score_count(), 3u);

  // Second call for the same digest hits the cache: no new prepare.
  ModerationStats again;
  engine.moderate_multi(image, all_policies_request(), &again);
  EXPECT_EQ(again.prepares, 0u);
  EXPECT_TRUE(again.cache_hit);
  EXPECT_EQ(backend->prepare_count(), 1u);
}

TEST(ModerationEngine, PreparesPerPolicyWithoutCaching) {
  const ImageRef image = ImageRef::from_bytes("image-2");
  auto backend = table_backend(image);
  EngineOptions options;
  options.use_prefix_cache = false;
  ModerationEngine engine(backend, PolicyRegistry::builtins(), options);

  ModerationStats stats;
  engine.moderate_multi(image, all_policies_request(), &stats);
  EXPECT_EQ(stats.prepares, 3u);
  EXPECT_EQ(backend->prepare_count(), 3u);
}

TEST(ModerationEngine, CachedAndUncachedProbabilitiesAgree) {
  const ImageRef image = ImageRef::from_bytes("image-3");

  auto run = [&](bool cache) {
    auto backend = table_backend(image);
    EngineOptions options;
    options.use_prefix_cache = cache;
    ModerationEngine engine(backend, PolicyRegistry::builtins(), options);
    return engine.moderate_multi(image, all_policies_request());
  };
  auto cached = run(true);
  auto uncached = run(false);
  ASSERT_EQ(cached.size(), uncached.size());
  for (std::size_t i = 0; i < cached.size(); ++i) {
    ASSERT_TRUE(cached[i].verdict.has_value());
    ASSERT_TRUE(uncached[i].verdict.has_value());
    EXPECT_NEAR(cached[i].verdict->probability,
                uncached[i].verdict->probability, 1e-12);
  }
}

TEST(ModerationEngine, ProbabilitiesMatchDirectEvaluation) {
  const ImageRef image = ImageRef::from_bytes("image-4");
  auto backend = table_backend(image);
  ModerationEngine engine(backend, PolicyRegistry::builtins());

  ModerationRequest request = all_policies_request();
  request.scoring.temperature = 2.0;
  request.scoring.alpha = 0.5;

  auto outcomes = engine.moderate_multi(image, request);
  const TokenLikelihoods expected_lk[] = {
      {-0.1, -2.3}, {-3.0, -0.2}, {-1.0, -1.0}};
  for (std::size_t i = 0; i < 3; ++i) {
    ASSERT_TRUE(outcomes[i].verdict.has_value()) << outcomes[i].policy_id;
    EXPECT_DOUBLE_EQ(outcomes[i].verdict->probability,
                     probability(expected_lk[i], request.scoring));
  }
}

TEST(ModerationEngine, PerPolicyThresholdOverrides) {
  const ImageRef image = ImageRef::from_bytes("image-5");
  auto backend = table_backend(image);
  ModerationEngine engine(backend, PolicyRegistry::builtins());

  ModerationRequest request = all_policies_request();
  request.default_threshold = 0.95;
  request.policy_thresholds["violence"] = 0.5;  // p == 0.5 exactly: tie hits

  auto outcomes = engine.moderate_multi(image, request);
  EXPECT_FALSE(outcomes[0].verdict->violative);  // p ~= 0.9002 < 0.95
  EXPECT_DOUBLE_EQ(outcomes[0].verdict->threshold, 0.95);
  EXPECT_DOUBLE_EQ(outcomes[2].verdict->threshold, 0.5);
  EXPECT_TRUE(outcomes[2].verdict->violative);  // exactly at threshold
}

TEST(ModerationEngine, EmptyPolicySetRejected) {
  const ImageRef image = ImageRef::from_bytes("image-6");
  ModerationEngine engine(table_backend(image), PolicyRegistry::builtins());
  ModerationRequest request;
  try {
    engine.moderate_multi(image, request);
    FAIL() << "expected EmptyPolicySet";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_policy_set);
  }
}

TEST(ModerationEngine, UnknownPolicyFlaggedPerOutcome) {
  const ImageRef image = ImageRef::from_bytes("image-7");
  ModerationEngine engine(table_backend(image), PolicyRegistry::builtins());

  ModerationRequest request;
  request.policy_ids = {"sexual", "spam"};
  auto outcomes = engine.moderate_multi(image, request);
  ASSERT_EQ(outcomes.size(), 2u);
  EXPECT_TRUE(outcomes[0].verdict.has_value());
  EXPECT_FALSE(outcomes[1].verdict.has_value());
  ASSERT_TRUE(outcomes[1].error_code.has_value());
  EXPECT_EQ(*outcomes[1].error_code, "UnknownPolicy");
}

TEST(ModerationEngine, PartialBackendFailureFlaggedNotDropped) {
  const ImageRef image = ImageRef::from_bytes("image-8");
  auto backend = std::make_shared<MockBackend>(builtin_policies());
  // Only two of three policies in the table; strict mode errors the third.
  backend->set_likelihoods(image.digest, "sexual", {-0.1, -2.3});
  backend->set_likelihoods(image.digest, "danger", {-3.0, -0.2});
  ModerationEngine engine(backend, PolicyRegistry::builtins());

  auto outcomes = engine.moderate_multi(image, all_policies_request());
  ASSERT_EQ(outcomes.size(), 3u);
  EXPECT_TRUE(outcomes[0].verdict.has_value());
  EXPECT_TRUE(outcomes[1].verdict.has_value());
  EXPECT_FALSE(outcomes[2].verdict.has_value());
  EXPECT_TRUE(outcomes[2].error.has_value());
  EXPECT_EQ(outcomes[2].error_code.value_or(""), "MalformedResponse");
}

TEST(ModerationEngine, RationaleModeFallsBackPerPolicy) {
  const ImageRef image = ImageRef::from_bytes("image-9");
  MockBackend::Options options;
  options.capabilities.supports_rationale_mode = false;
  auto backend = std::make_shared<MockBackend>(builtin_policies(), options);
  backend->set_default_likelihoods(image.digest, {-0.1, -2.3});
  ModerationEngine engine(backend, PolicyRegistry::builtins());

  ModerationRequest request = all_policies_request();
  request.mode = ModerateMode::rationale;
  auto outcomes = engine.moderate_multi(image, request);
  for (const auto& outcome : outcomes) {
    EXPECT_TRUE(outcome.verdict.has_value()) << outcome.policy_id;
    EXPECT_FALSE(outcome.rationale.has_value());
    ASSERT_TRUE(outcome.rationale_error.has_value());
    EXPECT_NE(outcome.rationale_error->find("CapabilityMissing"),
              std::string::npos);
  }
}

TEST(ModerationEngine, RationaleModeParsesText) {
  const ImageRef image = ImageRef::from_bytes("image-10");
  auto backend = table_backend(image);
  backend->set_text(image.digest, "Yes, the image shows graphic violence.");
  ModerationEngine engine(backend, PolicyRegistry::builtins());

  ModerationRequest request = all_policies_request();
  request.mode = ModerateMode::rationale;
  auto outcomes = engine.moderate_multi(image, request);
  ASSERT_TRUE(outcomes[0].rationale.has_value());
  EXPECT_TRUE(outcomes[0].rationale->yes);
  EXPECT_EQ(outcomes[0].rationale->rationale,
            "the image shows graphic violence.");
}

TEST(PreparedImageCache, EvictsLeastRecentlyUsed) {
  PreparedImageCache cache(2);
  auto make = [](const std::string& digest) {
    auto p = std::make_shared<PreparedImage>();
    p->digest = digest;
    p->preamble_sha256 = "h";
    return p;
  };
  cache.put(make("a"));
  cache.put(make("b"));
  EXPECT_NE(cache.get("a", "h"), nullptr);  // refresh a; b is now LRU
  cache.put(make("c"));                     // evicts b
  EXPECT_EQ(cache.size(), 2u);
  EXPECT_EQ(cache.get("b", "h"), nullptr);
  EXPECT_NE(cache.get("a", "h"), nullptr);
  EXPECT_NE(cache.get("c", "h"), nullptr);
}

TEST(PreparedImageCache, KeyedByPreambleToo) {
  PreparedImageCache cache(4);
  auto p = std::make_shared<PreparedImage>();
  p->digest = "d";
  p->preamble_sha256 = "p1";
  cache.put(p);
  EXPECT_NE(cache.get("d", "p1"), nullptr);
  EXPECT_EQ(cache.get("d", "p2"), nullptr);
}

TEST(ModerationEngine, CacheEvictionForcesReprepare) {
  EngineOptions options;
  options.cache_capacity = 1;
  auto backend = std::make_shared<MockBackend>(builtin_policies());
  const ImageRef first = ImageRef::from_bytes("first");
  const ImageRef second = ImageRef::from_bytes("second");
  backend->set_default_likelihoods(first.digest, {-1.0, -0.5});
  backend->set_default_likelihoods(second.digest, {-0.5, -1.0});
  ModerationEngine engine(backend, PolicyRegistry::builtins(), options);

  ModerationRequest request;
  request.policy_ids = {"sexual"};
  engine.moderate_multi(first, request);
  engine.moderate_multi(second, request);  // evicts first
  ModerationStats stats;
  engine.moderate_multi(first, request, &stats);
  EXPECT_EQ(stats.prepares, 1u);
  EXPECT_FALSE(stats.cache_hit);
  EXPECT_EQ(backend->prepare_count(), 3u);
}

}  // namespace
}  // namespace picket
