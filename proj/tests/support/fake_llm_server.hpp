// Copyright 2026 The tabsense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once
// Local chat-completions endpoint answering from a script, so the live and
// record backends can be driven over real HTTP.
// Must match the core library's build of httplib (one definition per binary).
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <atomic>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include "scripted_backend.hpp"

namespace tabsense::testing {

// Recognizes the stage from the first line of the shipped templates.
inline std::optional<Stage> stage_of_prompt(const std::string& prompt) {
  auto starts = [&](const char* p) { return prompt.rfind(p, 0) == 0; };
  if (starts("Write a SQL query over table w that selects the columns")) return Stage::col_sql;
  if (starts("Each row below describes one column")) return Stage::col_text;
  if (starts("Write a SQL query over table w that returns the rows")) return Stage::row_sql;
  if (starts("Decide which rows of the table")) return Stage::row_text;
  if (starts("Does answering the question need arithmetic")) return Stage::math_classify;
  if (starts("Write a SQL query over table w that computes")) return Stage::reason_sql;
  if (starts("Answer the question") || starts("Decide whether the statement")) return Stage::reason_text;
  return std::nullopt;
}

class FakeLlmServer {
 public:
  // The first `fail_first` requests get a 503 with Retry-After: 0.
  explicit FakeLlmServer(Script script, int fail_first = 0)
      : script_(std::move(script)), fail_first_(fail_first) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res);
    });
  }

  ~FakeLlmServer() { stop(); }

  FakeLlmServer(const FakeLlmServer&) = delete;
  FakeLlmServer& operator=(const FakeLlmServer&) = delete;

  // Binds an ephemeral port (or `port`) on 127.0.0.1 and serves in a thread.
  int start(int port = 0) {
    port_ = port == 0 ? server_.bind_to_any_port("127.0.0.1") : (server_.bind_to_port("127.0.0.1", port) ? port : -1);
    if (port_ <= 0) throw std::runtime_error("fake server: cannot bind");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  // Blocks serving requests on the calling thread.
  void serve_forever(int port) {
    if (!server_.listen("127.0.0.1", port)) throw std::runtime_error("fake server: cannot listen");
  }

  int port() const { return port_; }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  int requests() const { return requests_.load(); }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    int k = requests_.fetch_add(1);
    if (k < fail_first_) {
      res.status = 503;
      res.set_header("Retry-After", "0");
      res.set_content(R"({"error":{"message":"warming up"}})", "application/json");
      return;
    }
    auto reject = [&](const std::string& msg) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", {{"message", msg}}}}.dump(), "application/json");
    };
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      return reject("body is not JSON");
    }
    if (!body.contains("messages") || body["messages"].empty()) return reject("no messages");
    std::string prompt = body["messages"].back().value("content", "");
    auto stage = stage_of_prompt(prompt);
    if (!stage) return reject("unrecognized prompt");
    int n = body.value("n", 1);
    std::vector<std::string> completions;
    try {
      completions = scripted_completions(script_, *stage, prompt, n);
    } catch (const std::exception& e) {
      return reject(e.what());
    }
    nlohmann::json choices = nlohmann::json::array();
    for (std::size_t i = 0; i < completions.size(); ++i) {
      choices.push_back({{"index", i}, {"message", {{"role", "assistant"}, {"content", completions[i]}}},
                         {"finish_reason", "stop"}});
    }
    res.set_content(nlohmann::json{{"object", "chat.completion"}, {"choices", choices}}.dump(), "application/json");
  }

  Script script_;
  int fail_first_ = 0;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
};

}  // namespace tabsense::testing
