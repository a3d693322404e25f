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

#include <memory>
#include <string>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "picket/base64.hpp"
#include "picket/mock_backend.hpp"

namespace picket {
namespace {

using nlohmann::json;

// Gateway over a table-driven mock, served on an ephemeral port.
class ServiceFixture {
 public:
  explicit ServiceFixture(MockBackend::Options mock_options = {},
                          ModerationService::Options options = {},
                          EngineOptions engine_options = {}) {
    backend_ = std::make_shared<MockBackend>(builtin_policies(), mock_options);
    engine_ = std::make_shared<ModerationEngine>(
        backend_, PolicyRegistry::builtins(), engine_options);
    service_ = std::make_unique<ModerationService>(engine_, options);
    service_->attach(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~ServiceFixture() {
    server_.stop();
    thread_.join();
  }

  MockBackend& backend() { return *backend_; }

  httplib::Result post(const std::string& body) {
    httplib::Client client("127.0.0.1", port_);
    return client.Post("/v1/moderate", body, "application/json");
  }

  httplib::Result get(const std::string& path) {
    httplib::Client client("127.0.0.1", port_);
    return client.Get(path);
  }

 private:
  std::shared_ptr<MockBackend> backend_;
  std::shared_ptr<ModerationEngine> engine_;
  std::unique_ptr<ModerationService> service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

const ImageRef& test_image() {
  static const ImageRef image = ImageRef::from_bytes("service test image");
  return image;
}

void seed_table(MockBackend& backend) {
  backend.set_likelihoods(test_image().digest, "sexual", {-0.1, -2.3});
  backend.set_likelihoods(test_image().digest, "danger", {-3.0, -0.2});
  backend.set_likelihoods(test_image().digest, "violence", {-1.0, -1.0});
}

std::string digest_request(const std::string& extra = "") {
  return R"({"image": {"digest": ")" + test_image().digest + R"("})" + extra +
         "}";
}

TEST(Service, ScoresEveryRegisteredPolicyByDefault) {
  ServiceFixture fixture;
  seed_table(fixture.backend());

  auto res = fixture.post(digest_request());
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "application/json");

  const json body = json::parse(res->body);
  EXPECT_EQ(body.at("backend"), "mock");
  EXPECT_EQ(body.at("mode"), "verdict");
  ASSERT_EQ(body.at("results").size(), 3u);

  const TokenLikelihoods expected[] = {{-0.1, -2.3}, {-3.0, -0.2},
                                       {-1.0, -1.0}};
  const char* policies[] = {"sexual", "danger", "violence"};
  for (int i = 0; i < 3; ++i) {
    const auto& record = body.at("results")[i];
    EXPECT_EQ(record.at("policy"), policies[i]);
    EXPECT_NEAR(record.at("probability").get<double>(),
                probability(expected[i]), 1e-12);
    EXPECT_DOUBLE_EQ(record.at("threshold").get<double>(), 0.5);
    ASSERT_TRUE(record.contains("violative"));
  }
  EXPECT_TRUE(body.at("results")[0].at("violative").get<bool>());
  EXPECT_FALSE(body.at("results")[1].at("violative").get<bool>());
  EXPECT_TRUE(body.at("results")[2].at("violative").get<bool>());  // tie

  EXPECT_EQ(res->get_header_value("X-Picket-Backend"), "mock");
  EXPECT_EQ(res->get_header_value("X-Picket-Prepares"), "1");
  EXPECT_EQ(res->get_header_value("X-Picket-Scores"), "3");
  EXPECT_EQ(res->get_header_value("X-Picket-Cache-Hit"), "0");
  EXPECT_FALSE(res->get_header_value("X-Picket-Elapsed-Us").empty());
}

TEST(Service, RepeatedRequestsAreByteIdenticalAndCached) {
  ServiceFixture fixture;
  seed_table(fixture.backend());

  const std::string request = digest_request(R"(, "temperature": 2.0)");
  auto first = fixture.post(request);
  auto second = fixture.post(request);
  ASSERT_TRUE(first);
  ASSERT_TRUE(second);
  EXPECT_EQ(first->status, 200);
  EXPECT_EQ(second->status, 200);
  EXPECT_EQ(first->body, second->body);  // instrumentation lives in headers

  EXPECT_EQ(first->get_header_value("X-Picket-Cache-Hit"), "0");
  EXPECT_EQ(second->get_header_value("X-Picket-Cache-Hit"), "1");
  EXPECT_EQ(second->get_header_value("X-Picket-Prepares"), "0");
  EXPECT_EQ(second->get_header_value("X-Picket-Scores"), "3");
}

TEST(Service, InlineBytesAreHashedAndServed) {
  ServiceFixture fixture;
  fixture.backend().set_default_likelihoods(
      ImageRef::from_bytes("inline payload").digest, {-0.5, -0.7});

  const json request = {
      {"image", {{"bytes_b64", base64_encode("inline payload")}}},
      {"policies", {"danger"}},
  };
  auto res = fixture.post(request.dump());
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const json body = json::parse(res->body);
  ASSERT_EQ(body.at("results").size(), 1u);
  EXPECT_NEAR(body.at("results")[0].at("probability").get<double>(),
              probability({-0.5, -0.7}), 1e-12);
}

TEST(Service, RequestedSubsetAndPerPolicyThresholds) {
  ServiceFixture fixture;
  seed_table(fixture.backend());

  const std::string request = digest_request(
      R"(, "policies": ["danger", "sexual"],
         "thresholds": {"sexual": 0.95})");
  auto res = fixture.post(request);
  ASSERT_TRUE(res);
  const json body = json::parse(res->body);
  ASSERT_EQ(body.at("results").size(), 2u);
  EXPECT_EQ(body.at("results")[0].at("policy"), "danger");
  EXPECT_EQ(body.at("results")[1].at("policy"), "sexual");
  // p(sexual) ~= 0.9002 < 0.95: the override flips the verdict.
  EXPECT_FALSE(body.at("results")[1].at("violative").get<bool>());
  EXPECT_DOUBLE_EQ(body.at("results")[1].at("threshold").get<double>(), 0.95);
}

TEST(Service, ScoreModeOmitsVerdictFields) {
  ServiceFixture fixture;
  seed_table(fixture.backend());

  auto res = fixture.post(digest_request(R"(, "mode": "score")"));
  ASSERT_TRUE(res);
  const json body = json::parse(res->body);
  EXPECT_EQ(body.at("mode"), "score");
  for (const auto& record : body.at("results")) {
    EXPECT_TRUE(record.contains("probability"));
    EXPECT_FALSE(record.contains("threshold"));
    EXPECT_FALSE(record.contains("violative"));
  }
}

TEST(Service, RationaleModeFallsBackPerRecord) {
  MockBackend::Options mock_options;
  mock_options.capabilities.supports_rationale_mode = false;
  ServiceFixture fixture(mock_options);
  seed_table(fixture.backend());

  auto res = fixture.post(digest_request(R"(, "mode": "rationale")"));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);  // verdicts still served
  const json body = json::parse(res->body);
  for (const auto& record : body.at("results")) {
    EXPECT_TRUE(record.contains("probability"));
    EXPECT_FALSE(record.contains("rationale"));
    ASSERT_TRUE(record.contains("rationale_error"));
  }
}

TEST(Service, RationaleModeParsesCompletions) {
  ServiceFixture fixture;
  seed_table(fixture.backend());
  fixture.backend().set_text(test_image().digest,
                             "No. The scene is a harmless landscape.");

  auto res = fixture.post(
      digest_request(R"(, "policies": ["danger"], "mode": "rationale")"));
  ASSERT_TRUE(res);
  const json body = json::parse(res->body);
  const auto& record = body.at("results")[0];
  ASSERT_TRUE(record.contains("rationale"));
  EXPECT_FALSE(record.at("rationale").at("violative").get<bool>());
  EXPECT_EQ(record.at("rationale").at("text"),
            "The scene is a harmless landscape.");
}

TEST(Service, UnknownPolicyFailsTheRequestWith422) {
  ServiceFixture fixture;
  seed_table(fixture.backend());

  auto res = fixture.post(digest_request(R"(, "policies": ["spam"])"));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  const json body = json::parse(res->body);
  EXPECT_EQ(body.at("error").at("code"), "UnknownPolicy");
}

TEST(Service, MalformedRequestsAre400) {
  ServiceFixture fixture;

  auto not_json = fixture.post("this is not json");
  ASSERT_TRUE(not_json);
  EXPECT_EQ(not_json->status, 400);
  EXPECT_EQ(json::parse(not_json->body).at("error").at("code"),
            "InvalidRequest");

  auto no_image = fixture.post(R"({"policies": ["danger"]})");
  ASSERT_TRUE(no_image);
  EXPECT_EQ(no_image->status, 400);

  auto bad_digest = fixture.post(R"({"image": {"digest": "xyz"}})");
  ASSERT_TRUE(bad_digest);
  EXPECT_EQ(bad_digest->status, 400);

  auto bad_b64 = fixture.post(R"({"image": {"bytes_b64": "!!!"}})");
  ASSERT_TRUE(bad_b64);
  EXPECT_EQ(bad_b64->status, 400);

  auto empty_policies = fixture.post(digest_request(R"(, "policies": [])"));
  ASSERT_TRUE(empty_policies);
  EXPECT_EQ(empty_policies->status, 400);

  auto bad_temperature =
      fixture.post(digest_request(R"(, "temperature": 0)"));
  ASSERT_TRUE(bad_temperature);
  EXPECT_EQ(bad_temperature->status, 400);

  auto bad_threshold = fixture.post(digest_request(R"(, "threshold": 1.5)"));
  ASSERT_TRUE(bad_threshold);
  EXPECT_EQ(bad_threshold->status, 400);
}

TEST(Service, OversizedInlineImagesAre400) {
  ModerationService::Options options;
  options.max_inline_bytes = 16;
  ServiceFixture fixture({}, options);

  const json request = {
      {"image", {{"bytes_b64", base64_encode(std::string(64, 'x'))}}}};
  auto res = fixture.post(request.dump());
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(json::parse(res->body).at("error").at("code"), "InvalidRequest");
}

TEST(Service, WholeRequestFailureTakesTheBackendStatus) {
  ServiceFixture fixture;  // strict mock, no table rows seeded

  auto res = fixture.post(digest_request());
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 502);
  // The body keeps the per-record detail; only the status is lifted.
  const json body = json::parse(res->body);
  ASSERT_EQ(body.at("results").size(), 3u);
  for (const auto& record : body.at("results")) {
    EXPECT_EQ(record.at("error_code"), "MalformedResponse");
    EXPECT_FALSE(record.contains("probability"));
  }
}

TEST(Service, PartialFailureStays200WithPerRecordErrors) {
  ServiceFixture fixture;
  fixture.backend().set_likelihoods(test_image().digest, "sexual",
                                    {-0.1, -2.3});
  // danger and violence have no row: strict mock errors those policies only.

  auto res = fixture.post(digest_request());
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const json body = json::parse(res->body);
  ASSERT_EQ(body.at("results").size(), 3u);
  EXPECT_TRUE(body.at("results")[0].contains("probability"));
  EXPECT_EQ(body.at("results")[1].at("error_code"), "MalformedResponse");
  EXPECT_TRUE(body.at("results")[1].contains("error"));
  EXPECT_FALSE(body.at("results")[1].contains("probability"));
}

TEST(Service, PoliciesEndpointListsTheRegistry) {
  ServiceFixture fixture;
  auto res = fixture.get("/v1/policies");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const json body = json::parse(res->body);
  ASSERT_EQ(body.at("policies").size(), 3u);
  EXPECT_EQ(body.at("policies")[0].at("id"), "sexual");
  EXPECT_FALSE(body.at("policies")[0].at("title").get<std::string>().empty());
  EXPECT_FALSE(
      body.at("policies")[0].at("definition").get<std::string>().empty());
}

TEST(Service, HealthzReportsTheBackend) {
  ServiceFixture fixture;
  auto res = fixture.get("/healthz");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const json body = json::parse(res->body);
  EXPECT_EQ(body.at("status"), "ok");
  EXPECT_EQ(body.at("backend"), "mock");
}

TEST(ServiceConfig, ParsesDocumentAndValidates) {
  const std::string doc = R"({
    "backend": {"mock_manifest": "/tmp/rows.jsonl"},
    "policy_file": "",
    "prompt_style": "llavaguard",
    "cache": {"enabled": false, "capacity": 8},
    "defaults": {"temperature": 2.0, "alpha": 0.25, "threshold": 0.6},
    "listen": "0.0.0.0:9999",
    "max_inline_bytes": 1024,
    "url_fetch_timeout_ms": 50
  })";
  ServiceConfig config = load_service_config(doc);
  ASSERT_TRUE(config.mock_manifest.has_value());
  EXPECT_EQ(*config.mock_manifest, "/tmp/rows.jsonl");
  EXPECT_FALSE(config.http_backend.has_value());
  EXPECT_EQ(config.style, PromptStyle::llavaguard);
  EXPECT_FALSE(config.use_prefix_cache);
  EXPECT_EQ(config.cache_capacity, 8u);
  EXPECT_DOUBLE_EQ(config.default_temperature, 2.0);
  EXPECT_DOUBLE_EQ(config.default_alpha, 0.25);
  EXPECT_DOUBLE_EQ(config.default_threshold, 0.6);
  EXPECT_EQ(config.listen, "0.0.0.0:9999");
  EXPECT_EQ(config.max_inline_bytes, 1024u);
  EXPECT_EQ(config.url_fetch_timeout_ms, 50);

  try {
    load_service_config(R"({"defaults": {"temperature": -1}})");
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
  }
  try {
    load_service_config(R"({"defaults": {"threshold": 1.5}})");
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
  }
  try {
    load_service_config("nope");
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
  }
}

TEST(ServiceConfig, MakeBackendWiresTheMock) {
  ServiceConfig config;
  config.mock_manifest = std::string(PICKET_DATA_DIR) + "/mock_rows.jsonl";
  PolicyRegistry registry = make_registry(config);
  EXPECT_EQ(registry.size(), 3u);
  auto backend = make_backend(config, registry);
  ASSERT_NE(backend, nullptr);
  EXPECT_EQ(backend->name(), "mock");

  ServiceConfig none;
  try {
    make_backend(none, registry);
    FAIL() << "expected BackendUnavailable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::backend_unavailable);
  }
}

}  // namespace
}  // namespace picket
