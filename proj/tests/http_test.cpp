// Copyright 2026-present the wipcast project
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

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "test_support.hpp"

namespace wipcast {
namespace {

/// Local chat-completions and embeddings server on a free port.
class FakeServer {
 public:
  FakeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++chat_calls_;
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = nlohmann::json::parse(req.body);
      if (n <= fail_first_) {
        res.status = 503;
        res.set_content("busy", "text/plain");
        return;
      }
      if (malformed_) {
        res.set_content("{\"choices\": []}", "application/json");
        return;
      }
      res.set_content(nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", "PREDICTION: 12.50"}}}}}}}.dump(),
                      "application/json");
    });
    server_.Post("/v1/embeddings", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json data = nlohmann::json::array();
      for (const auto& t : body.at("input")) {
        const double len = static_cast<double>(t.get<std::string>().size());
        data.push_back({{"embedding", {1.0, len, 2.0}}});
      }
      res.set_content(nlohmann::json{{"data", data}, {"model", body.at("model")}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> chat_calls_{0};
  int fail_first_ = 0;
  bool malformed_ = false;
  std::string last_auth_;
  nlohmann::json last_body_;
};

HttpOptions fast() {
  HttpOptions h;
  h.timeout = std::chrono::milliseconds{2000};
  h.retries = 2;
  h.backoff_base = std::chrono::milliseconds{1};
  h.api_key_env = "WIPCAST_TEST_KEY";
  return h;
}

ChatRequest simple_request() {
  ChatRequest req;
  req.system_text = "system";
  req.user_text = "user";
  return req;
}

TEST(Http, RemoteChatRoundTrip) {
  FakeServer srv;
  ::setenv("WIPCAST_TEST_KEY", "secret-token", 1);
  RemoteChatBackend::Options o;
  o.endpoint = srv.url("/v1/chat/completions");
  o.http = fast();
  RemoteChatBackend chat(o);
  const auto resp = chat.chat(simple_request());
  ::unsetenv("WIPCAST_TEST_KEY");
  EXPECT_EQ(resp.text, "PREDICTION: 12.50");
  EXPECT_EQ(resp.backend_id, "remote:o3-mini");
  EXPECT_EQ(srv.last_auth_, "Bearer secret-token");
  EXPECT_EQ(srv.last_body_["model"], "o3-mini");
  EXPECT_EQ(srv.last_body_["messages"][0]["role"], "system");
  EXPECT_EQ(srv.last_body_["messages"][1]["content"], "user");
  EXPECT_EQ(srv.last_body_["temperature"], 0);
}

TEST(Http, NoKeyMeansNoAuthorizationHeader) {
  FakeServer srv;
  ::unsetenv("WIPCAST_TEST_KEY");
  RemoteChatBackend::Options o;
  o.endpoint = srv.url("/v1/chat/completions");
  o.http = fast();
  RemoteChatBackend(o).chat(simple_request());
  EXPECT_TRUE(srv.last_auth_.empty());
}

TEST(Http, RetriesTransientFailures) {
  FakeServer srv;
  srv.fail_first_ = 2;
  RemoteChatBackend::Options o;
  o.endpoint = srv.url("/v1/chat/completions");
  o.http = fast();
  EXPECT_EQ(RemoteChatBackend(o).chat(simple_request()).text, "PREDICTION: 12.50");
  EXPECT_EQ(srv.chat_calls_.load(), 3);
}

TEST(Http, GivesUpAfterRetries) {
  FakeServer srv;
  srv.fail_first_ = 100;
  RemoteChatBackend::Options o;
  o.endpoint = srv.url("/v1/chat/completions");
  o.http = fast();
  try {
    RemoteChatBackend(o).chat(simple_request());
    FAIL();
  } catch (const BackendUnavailable& e) {
    EXPECT_EQ(e.attempts(), 3);
    EXPECT_NE(std::string(e.what()).find("503"), std::string::npos);
  }
  EXPECT_EQ(srv.chat_calls_.load(), 3);
}

TEST(Http, MalformedPayloadIsRetriedThenUnavailable) {
  FakeServer srv;
  srv.malformed_ = true;
  RemoteChatBackend::Options o;
  o.endpoint = srv.url("/v1/chat/completions");
  o.http = fast();
  o.http.retries = 1;
  EXPECT_THROW(RemoteChatBackend(o).chat(simple_request()), BackendUnavailable);
  EXPECT_EQ(srv.chat_calls_.load(), 2);
}

TEST(Http, ConnectionRefused) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  RemoteChatBackend::Options o;
  o.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  o.http = fast();
  o.http.retries = 0;
  EXPECT_THROW(RemoteChatBackend(o).chat(simple_request()), BackendUnavailable);
}

TEST(Http, BadEndpoints) {
  RemoteChatBackend::Options o;
  EXPECT_THROW(RemoteChatBackend{o}, ConfigError);
  o.endpoint = "localhost:8080/x";
  EXPECT_THROW(RemoteChatBackend{o}, ConfigError);
}

TEST(Http, RemoteEmbedder) {
  FakeServer srv;
  RemoteEmbedder emb(srv.url("/v1/embeddings"), RemoteEmbedder::kDefaultModel, fast());
  const std::vector<std::string> texts = {"ab", "abcd"};
  const auto v = emb.embed_batch(texts);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[1].values, (std::vector<double>{1.0, 4.0, 2.0}));
  EXPECT_EQ(emb.embed("xyz").values[1], 3.0);
  EXPECT_EQ(emb.id(), "remote:BAAI/bge-base-en-v1.5");
  // Works as a memory provider.
  ProcessMemory mem(std::make_shared<RemoteEmbedder>(srv.url("/v1/embeddings"), "m", fast()), Granularity::daily);
  mem.add(render_contextual_story(testing::example_day(), 71));
  EXPECT_EQ(mem.index().dim(), 3u);
}

TEST(Http, FusionFallsBackWhenBackendIsDown) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  RemoteChatBackend::Options o;
  o.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  o.http = fast();
  o.http.retries = 0;
  RemoteChatBackend chat(o);
  std::vector<Prediction> preds(3);
  for (std::size_t i = 0; i < 3; ++i) {
    preds[i].agent = static_cast<AgentId>(i);
    preds[i].value = 10.0 + 5.0 * static_cast<double>(i);
  }
  FusionOptions fo;
  fo.mode = FusionMode::react;
  const auto r = fuse(testing::day(2024, 1, 2), preds, trend_analyze(std::vector<double>{5, 5, 5}), nullptr, &chat, fo);
  EXPECT_EQ(r.mode, FusionMode::rules);
  EXPECT_EQ(r.final_value, fuse_rules(testing::day(2024, 1, 2), preds, r.trend).final_value);
  EXPECT_NE(r.rationale.find("fell back"), std::string::npos);
}

}  // namespace
}  // namespace wipcast
