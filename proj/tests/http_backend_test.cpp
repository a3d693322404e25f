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

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "picket/image_ref.hpp"

namespace picket {
namespace {

using nlohmann::json;

// In-process scoring server; handlers must be registered before start().
class FakeScorer {
 public:
  ~FakeScorer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }

  httplib::Server& server() { return server_; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

BackendCapabilities all_capabilities() {
  return BackendCapabilities{
      .supports_first_token_logprobs = true,
      .supports_prefix_cache = true,
      .supports_rationale_mode = true,
  };
}

HttpBackendConfig fast_config(const std::string& base_url) {
  HttpBackendConfig config;
  config.base_url = base_url;
  config.timeout_ms = 2000;
  config.retry.max_attempts = 1;
  config.retry.sleeper = [](std::chrono::milliseconds) {};
  config.capabilities_override = all_capabilities();
  return config;
}

TEST(HttpBackend, FetchesCapabilitiesOnceAndNamesItself) {
  FakeScorer scorer;
  std::atomic<int> hits{0};
  scorer.server().Get("/v1/capabilities", [&](const httplib::Request&,
                                              httplib::Response& res) {
    ++hits;
    res.set_content(R"({"name": "fake-vlm", "first_token_logprobs": true,
                        "prefix_cache": true, "rationale": false})",
                    "application/json");
  });
  scorer.start();

  HttpBackendConfig config = fast_config(scorer.base_url());
  config.capabilities_override.reset();  // exercise the endpoint
  HttpBackend backend(config);

  auto caps = backend.capabilities();
  EXPECT_TRUE(caps.supports_first_token_logprobs);
  EXPECT_TRUE(caps.supports_prefix_cache);
  EXPECT_FALSE(caps.supports_rationale_mode);
  EXPECT_EQ(backend.name(), "fake-vlm");
  backend.capabilities();
  EXPECT_EQ(hits.load(), 1);  // cached after the first fetch
}

TEST(HttpBackend, PreparesOnceThenScoresByPreparedId) {
  FakeScorer scorer;
  std::string prepare_body;
  std::string score_body;
  scorer.server().Post("/v1/prepare", [&](const httplib::Request& req,
                                          httplib::Response& res) {
    prepare_body = req.body;
    res.set_content(R"({"prepared_id": "p-17"})", "application/json");
  });
  scorer.server().Post("/v1/score_first_token",
                       [&](const httplib::Request& req,
                           httplib::Response& res) {
                         score_body = req.body;
                         res.set_content(
                             R"({"first_token_logprobs": [
                                  {"token": " Yes", "logprob": -0.25},
                                  {"token": "yes", "logprob": -0.10},
                                  {"token": "No", "logprob": -2.50},
                                  {"token": "the", "logprob": -5.00}]})",
                             "application/json");
                       });
  scorer.start();

  HttpBackend backend(fast_config(scorer.base_url()));
  const ImageRef image = ImageRef::from_bytes("fake image bytes");
  auto prepared = backend.prepare(image, "shared preamble");
  ASSERT_NE(prepared, nullptr);
  EXPECT_EQ(prepared->digest, image.digest);

  auto lk = backend.score_first_token(*prepared, "full prompt text");
  // Candidate variants (case, leading space) collapse to the most likely.
  EXPECT_DOUBLE_EQ(lk.ll_yes, -0.10);
  EXPECT_DOUBLE_EQ(lk.ll_no, -2.50);

  const json prepare_req = json::parse(prepare_body);
  EXPECT_EQ(prepare_req.at("preamble"), "shared preamble");
  EXPECT_EQ(prepare_req.at("image").at("digest"), image.digest);
  ASSERT_TRUE(prepare_req.at("image").contains("bytes_b64"));

  const json score_req = json::parse(score_body);
  EXPECT_EQ(score_req.at("prepared_id"), "p-17");
  EXPECT_FALSE(score_req.contains("image"));  // payload never resent
  EXPECT_EQ(score_req.at("prompt"), "full prompt text");
  EXPECT_EQ(score_req.at("candidates")[0], "Yes");
  EXPECT_EQ(score_req.at("candidates")[1], "No");
}

TEST(HttpBackend, InlinesTheImageWithoutPrefixCache) {
  FakeScorer scorer;
  std::string score_body;
  scorer.server().Post("/v1/score_first_token",
                       [&](const httplib::Request& req,
                           httplib::Response& res) {
                         score_body = req.body;
                         res.set_content(
                             R"({"first_token_logprobs": [
                                  {"token": "Yes", "logprob": -1.0},
                                  {"token": "No", "logprob": -0.5}]})",
                             "application/json");
                       });
  scorer.start();

  HttpBackendConfig config = fast_config(scorer.base_url());
  config.capabilities_override->supports_prefix_cache = false;
  HttpBackend backend(config);

  const ImageRef image = ImageRef::from_bytes("bytes");
  auto prepared = backend.prepare(image, "preamble");  // no server call
  auto lk = backend.score_first_token(*prepared, "prompt");
  EXPECT_DOUBLE_EQ(lk.ll_yes, -1.0);

  const json score_req = json::parse(score_body);
  EXPECT_FALSE(score_req.contains("prepared_id"));
  EXPECT_EQ(score_req.at("image").at("digest"), image.digest);
  ASSERT_TRUE(score_req.at("image").contains("bytes_b64"));
}

TEST(HttpBackend, SendsBearerTokenFromEnvironment) {
  ASSERT_EQ(setenv("PICKET_TEST_TOKEN", "sekret-42", 1), 0);
  FakeScorer scorer;
  std::string auth_header;
  scorer.server().Post("/v1/generate", [&](const httplib::Request& req,
                                           httplib::Response& res) {
    auth_header = req.get_header_value("Authorization");
    res.set_content(R"({"text": "No. Nothing to see."})", "application/json");
  });
  scorer.start();

  HttpBackendConfig config = fast_config(scorer.base_url());
  config.auth_env_var = "PICKET_TEST_TOKEN";
  config.capabilities_override->supports_prefix_cache = false;
  HttpBackend backend(config);

  const ImageRef image = ImageRef::from_bytes("x");
  auto result = backend.generate_rationale(image, "prompt");
  EXPECT_FALSE(result.yes);
  EXPECT_EQ(auth_header, "Bearer sekret-42");
  unsetenv("PICKET_TEST_TOKEN");
}

TEST(HttpBackend, RetriesServerErrorsThenSucceeds) {
  FakeScorer scorer;
  std::atomic<int> hits{0};
  scorer.server().Post("/v1/score_first_token",
                       [&](const httplib::Request&, httplib::Response& res) {
                         if (++hits <= 2) {
                           res.status = 503;
                           res.set_content("overloaded", "text/plain");
                           return;
                         }
                         res.set_content(
                             R"({"first_token_logprobs": [
                                  {"token": "Yes", "logprob": -0.3},
                                  {"token": "No", "logprob": -1.4}]})",
                             "application/json");
                       });
  scorer.start();

  HttpBackendConfig config = fast_config(scorer.base_url());
  config.capabilities_override->supports_prefix_cache = false;
  config.retry.max_attempts = 3;
  std::vector<long long> sleeps;
  config.retry.sleeper = [&](std::chrono::milliseconds d) {
    sleeps.push_back(d.count());
  };
  HttpBackend backend(config);

  const ImageRef image = ImageRef::from_bytes("x");
  auto lk = backend.score_first_token(image, "prompt");
  EXPECT_DOUBLE_EQ(lk.ll_yes, -0.3);
  EXPECT_EQ(hits.load(), 3);
  EXPECT_EQ(sleeps, (std::vector<long long>{100, 200}));
}

TEST(HttpBackend, ClientErrorsAreFinal) {
  FakeScorer scorer;
  std::atomic<int> hits{0};
  scorer.server().Post("/v1/score_first_token",
                       [&](const httplib::Request&, httplib::Response& res) {
                         ++hits;
                         res.status = 404;
                         res.set_content("no such model", "text/plain");
                       });
  scorer.start();

  HttpBackendConfig config = fast_config(scorer.base_url());
  config.capabilities_override->supports_prefix_cache = false;
  config.retry.max_attempts = 3;
  HttpBackend backend(config);

  const ImageRef image = ImageRef::from_bytes("x");
  try {
    backend.score_first_token(image, "prompt");
    FAIL() << "expected MalformedResponse";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::malformed_response);
  }
  EXPECT_EQ(hits.load(), 1);  // 4xx is not retried
}

TEST(HttpBackend, MissingCandidateTokenIsMalformed) {
  FakeScorer scorer;
  scorer.server().Post("/v1/score_first_token",
                       [&](const httplib::Request&, httplib::Response& res) {
                         res.set_content(
                             R"({"first_token_logprobs": [
                                  {"token": "Yes", "logprob": -0.3}]})",
                             "application/json");
                       });
  scorer.start();

  HttpBackendConfig config = fast_config(scorer.base_url());
  config.capabilities_override->supports_prefix_cache = false;
  HttpBackend backend(config);

  const ImageRef image = ImageRef::from_bytes("x");
  try {
    backend.score_first_token(image, "prompt");
    FAIL() << "expected MalformedResponse";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::malformed_response);
    EXPECT_NE(std::string(e.what()).find("both candidate"),
              std::string::npos);
  }
}

TEST(HttpBackend, GarbageBodyIsMalformed) {
  FakeScorer scorer;
  scorer.server().Post("/v1/score_first_token",
                       [&](const httplib::Request&, httplib::Response& res) {
                         res.set_content("<html>oops</html>", "text/html");
                       });
  scorer.start();

  HttpBackendConfig config = fast_config(scorer.base_url());
  config.capabilities_override->supports_prefix_cache = false;
  HttpBackend backend(config);

  const ImageRef image = ImageRef::from_bytes("x");
  try {
    backend.score_first_token(image, "prompt");
    FAIL() << "expected MalformedResponse";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::malformed_response);
  }
}

TEST(HttpBackend, UnreachableServerIsBackendUnavailable) {
  int dead_port;
  {
    // Grab a port the OS hands out as free, then release it.
    FakeScorer scorer;
    scorer.start();
    dead_port = std::stoi(scorer.base_url().substr(
        scorer.base_url().rfind(':') + 1));
  }

  HttpBackendConfig config =
      fast_config("http://127.0.0.1:" + std::to_string(dead_port));
  config.capabilities_override->supports_prefix_cache = false;
  HttpBackend backend(config);

  const ImageRef image = ImageRef::from_bytes("x");
  try {
    backend.score_first_token(image, "prompt");
    FAIL() << "expected BackendUnavailable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::backend_unavailable);
  }
}

TEST(HttpBackend, SlowServerTimesOut) {
  FakeScorer scorer;
  scorer.server().Post("/v1/score_first_token",
                       [&](const httplib::Request&, httplib::Response& res) {
                         std::this_thread::sleep_for(
                             std::chrono::milliseconds(500));
                         res.set_content("{}", "application/json");
                       });
  scorer.start();

  HttpBackendConfig config = fast_config(scorer.base_url());
  config.capabilities_override->supports_prefix_cache = false;
  config.timeout_ms = 50;
  HttpBackend backend(config);

  const ImageRef image = ImageRef::from_bytes("x");
  try {
    backend.score_first_token(image, "prompt");
    FAIL() << "expected Timeout";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::timeout);
  }
}

}  // namespace
}  // namespace picket
