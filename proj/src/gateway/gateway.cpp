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

#include "tabsense/gateway.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "tabsense/error.hpp"

namespace tabsense {

using nlohmann::json;

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::col_sql: return "col_sql";
    case Stage::col_text: return "col_text";
    case Stage::row_sql: return "row_sql";
    case Stage::row_text: return "row_text";
    case Stage::math_classify: return "math_classify";
    case Stage::reason_sql: return "reason_sql";
    case Stage::reason_text: return "reason_text";
  }
  return "col_sql";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (Stage s : kAllStages) {
    if (name == stage_name(s)) return s;
  }
  return std::nullopt;
}

const char* backend_name(BackendKind k) {
  switch (k) {
    case BackendKind::live: return "live";
    case BackendKind::record: return "record";
    case BackendKind::replay: return "replay";
  }
  return "live";
}

std::optional<BackendKind> parse_backend(std::string_view name) {
  for (BackendKind k : {BackendKind::live, BackendKind::record, BackendKind::replay}) {
    if (name == backend_name(k)) return k;
  }
  return std::nullopt;
}

void SamplingParams::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw ConfigError("temperature must be in [0, 2], got " + std::to_string(temperature));
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1], got " + std::to_string(top_p));
  if (max_output_tokens <= 0) throw ConfigError("max_output_tokens must be positive");
  if (n_samples <= 0) throw ConfigError("n_samples must be positive");
}

int generation_budget(const std::vector<LlmExchange>& exchanges) {
  int total = 0;
  for (const auto& e : exchanges) {
    if (!e.failed && e.stage != Stage::math_classify) total += e.params.n_samples;
  }
  return total;
}

int classify_samples(const std::vector<LlmExchange>& exchanges) {
  int total = 0;
  for (const auto& e : exchanges) {
    if (!e.failed && e.stage == Stage::math_classify) total += e.params.n_samples;
  }
  return total;
}

std::string fixture_digest(Stage stage, std::string_view prompt) {
  std::string material = stage_name(stage);
  material.push_back('\n');
  material.append(prompt);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(material.data(), material.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw GatewayError("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

// ---- retries and live backend ----

double backoff_delay(const RetryPolicy& policy, int attempt, std::optional<double> retry_after_s) {
  double d = policy.base_delay_s * std::pow(2.0, attempt - 1);
  d = std::min(d, policy.max_delay_s);
  if (retry_after_s && *retry_after_s > d) d = std::min(*retry_after_s, policy.max_delay_s);
  return d;
}

// A counting semaphore whose capacity is a runtime value, plus a high-water
// mark so tests can observe the cap.
struct LiveBackend::State {
  std::mutex mu;
  std::condition_variable cv;
  int capacity = 4;
  int in_flight = 0;
  int high_water = 0;

  void acquire() {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return in_flight < capacity; });
    ++in_flight;
    high_water = std::max(high_water, in_flight);
  }
  void release() {
    {
      std::lock_guard lock(mu);
      --in_flight;
    }
    cv.notify_one();
  }
};

LiveBackend::LiveBackend(std::shared_ptr<Transport> transport, std::string model, RetryPolicy retry,
                         int max_in_flight)
    : transport_(std::move(transport)), model_(std::move(model)), retry_(std::move(retry)),
      state_(std::make_unique<State>()) {
  if (!transport_) throw ConfigError("live backend needs a transport");
  if (max_in_flight <= 0) throw ConfigError("max_in_flight must be positive");
  if (retry_.max_attempts <= 0) throw ConfigError("retry max_attempts must be positive");
  state_->capacity = max_in_flight;
  if (!retry_.sleep) {
    retry_.sleep = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
  }
}

LiveBackend::~LiveBackend() = default;

int LiveBackend::max_in_flight_observed() const {
  std::lock_guard lock(state_->mu);
  return state_->high_water;
}

namespace {

std::vector<std::string> parse_choices(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw GatewayError("response is not a JSON object");
  if (!j.contains("choices") || !j["choices"].is_array()) throw GatewayError("response has no choices array");
  std::vector<std::string> out;
  for (const auto& c : j["choices"]) {
    if (c.contains("message") && c["message"].contains("content") && c["message"]["content"].is_string()) {
      out.push_back(c["message"]["content"].get<std::string>());
    } else if (c.contains("text") && c["text"].is_string()) {
      out.push_back(c["text"].get<std::string>());
    } else {
      out.emplace_back();
    }
  }
  return out;
}

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

std::vector<std::string> LiveBackend::complete(Stage, const std::string& prompt, const SamplingParams& params) {
  params.validate();
  std::vector<std::string> out;
  // Some endpoints ignore n; keep asking for the remainder.
  for (int round = 0; static_cast<int>(out.size()) < params.n_samples; ++round) {
    if (round >= params.n_samples) throw GatewayError("endpoint returned no choices");
    json req = {{"model", model_},
                {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                {"temperature", params.temperature},
                {"top_p", params.top_p},
                {"n", params.n_samples - static_cast<int>(out.size())},
                {"max_tokens", params.max_output_tokens}};
    std::string body = req.dump();
    std::string last_error;
    bool done = false;
    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
      std::optional<HttpResponse> resp;
      state_->acquire();
      try {
        resp = transport_->post_json(body);
      } catch (const std::exception& e) {
        last_error = e.what();
      }
      state_->release();
      std::optional<double> hint;
      if (resp) {
        if (resp->status >= 200 && resp->status < 300) {
          for (auto& c : parse_choices(resp->body)) {
            if (static_cast<int>(out.size()) < params.n_samples) out.push_back(std::move(c));
          }
          done = true;
          break;
        }
        last_error = "HTTP " + std::to_string(resp->status);
        if (!retryable(resp->status)) throw GatewayError(last_error + ": " + resp->body.substr(0, 200));
        hint = resp->retry_after_s;
      }
      if (attempt < retry_.max_attempts) retry_.sleep(backoff_delay(retry_, attempt, hint));
    }
    if (!done) {
      throw GatewayError("gave up after " + std::to_string(retry_.max_attempts) + " attempts: " + last_error);
    }
  }
  return out;
}

// ---- fixtures ----

FixtureStore::FixtureStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path FixtureStore::path_for(Stage stage, std::string_view prompt) const {
  return dir_ / (short_digest(fixture_digest(stage, prompt)) + ".json");
}

std::optional<std::vector<std::string>> FixtureStore::load(Stage stage, const std::string& prompt) const {
  std::shared_lock lock(mu_);
  std::ifstream in(path_for(stage, prompt), std::ios::binary);
  if (!in) return std::nullopt;
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  if (j.value("stage", "") != stage_name(stage) || j.value("prompt", "") != prompt) return std::nullopt;
  if (!j.contains("completions") || !j["completions"].is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& c : j["completions"]) out.push_back(c.is_string() ? c.get<std::string>() : std::string());
  return out;
}

void FixtureStore::save(Stage stage, const std::string& prompt, const SamplingParams& params,
                        const std::vector<std::string>& completions) {
  std::unique_lock lock(mu_);
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  json j = {{"stage", stage_name(stage)},
            {"digest", fixture_digest(stage, prompt)},
            {"prompt", prompt},
            {"params",
             {{"temperature", params.temperature},
              {"top_p", params.top_p},
              {"max_output_tokens", params.max_output_tokens},
              {"n_samples", params.n_samples}}},
            {"completions", completions}};
  auto target = path_for(stage, prompt);
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write fixture " + tmp.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("short write on fixture " + tmp.string());
  }
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename fixture into place: " + ec.message());
}

RecordBackend::RecordBackend(std::shared_ptr<Backend> upstream, std::shared_ptr<FixtureStore> store)
    : upstream_(std::move(upstream)), store_(std::move(store)) {
  if (!upstream_ || !store_) throw ConfigError("record backend needs an upstream and a fixture store");
}

std::vector<std::string> RecordBackend::complete(Stage stage, const std::string& prompt,
                                                 const SamplingParams& params) {
  auto completions = upstream_->complete(stage, prompt, params);
  store_->save(stage, prompt, params, completions);
  return completions;
}

ReplayBackend::ReplayBackend(std::shared_ptr<FixtureStore> store) : store_(std::move(store)) {
  if (!store_) throw ConfigError("replay backend needs a fixture store");
}

std::vector<std::string> ReplayBackend::complete(Stage stage, const std::string& prompt,
                                                 const SamplingParams& params) {
  auto found = store_->load(stage, prompt);
  std::string digest = short_digest(fixture_digest(stage, prompt));
  if (!found) {
    throw ConfigError(std::string("replay miss: no fixture for stage ") + stage_name(stage) + " digest " + digest +
                      " in " + store_->dir().string());
  }
  if (static_cast<int>(found->size()) < params.n_samples) {
    throw ConfigError("fixture " + digest + " has " + std::to_string(found->size()) + " completions, need " +
                      std::to_string(params.n_samples));
  }
  found->resize(static_cast<std::size_t>(params.n_samples));
  return *found;
}

// ---- gateway ----

Gateway::Gateway(std::shared_ptr<Backend> backend) : backend_(std::move(backend)) {
  if (!backend_) throw ConfigError("gateway needs a backend");
}

LlmExchange Gateway::complete(Stage stage, const std::string& prompt, const SamplingParams& params,
                              std::vector<LlmExchange>& log) {
  params.validate();
  LlmExchange ex;
  ex.stage = stage;
  ex.prompt = prompt;
  ex.params = params;
  ex.backend = backend_->kind();
  ex.timestamp_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
  auto start = std::chrono::steady_clock::now();
  try {
    ex.completions = backend_->complete(stage, prompt, params);
    if (static_cast<int>(ex.completions.size()) != params.n_samples) {
      throw GatewayError("backend returned " + std::to_string(ex.completions.size()) + " completions, expected " +
                         std::to_string(params.n_samples));
    }
  } catch (const GatewayError& e) {
    ex.completions.clear();
    ex.failed = true;
    ex.error = e.what();
  }
  ex.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  log.push_back(ex);
  return ex;
}

}  // namespace tabsense
