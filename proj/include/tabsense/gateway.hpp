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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace tabsense {

enum class Stage { col_sql, col_text, row_sql, row_text, math_classify, reason_sql, reason_text };

inline constexpr std::array<Stage, 7> kAllStages = {Stage::col_sql,       Stage::col_text,   Stage::row_sql,
                                                    Stage::row_text,      Stage::math_classify,
                                                    Stage::reason_sql,    Stage::reason_text};

const char* stage_name(Stage s);
std::optional<Stage> parse_stage(std::string_view name);

struct SamplingParams {
  double temperature = 0.0;
  double top_p = 1.0;
  int max_output_tokens = 256;
  int n_samples = 1;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

enum class BackendKind { live, record, replay };

const char* backend_name(BackendKind k);
std::optional<BackendKind> parse_backend(std::string_view name);

struct LlmExchange {
  Stage stage = Stage::col_sql;
  std::string prompt;
  SamplingParams params;
  std::vector<std::string> completions;
  BackendKind backend = BackendKind::replay;
  std::int64_t timestamp_ms = 0;  // wall clock at send
  double latency_ms = 0.0;
  bool failed = false;  // transport failure after retries; completions empty
  std::string error;
};

// Sum of n_samples over successful exchanges, excluding math_classify,
// which is reported separately by classify_samples().
int generation_budget(const std::vector<LlmExchange>& exchanges);
int classify_samples(const std::vector<LlmExchange>& exchanges);

// SHA-256 hex of stage name, '\n', prompt bytes.
std::string fixture_digest(Stage stage, std::string_view prompt);
inline std::string short_digest(const std::string& digest) { return digest.substr(0, 16); }

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendKind kind() const = 0;
  // Returns exactly params.n_samples completions. Transport failures throw
  // GatewayError; a replay miss throws ConfigError.
  virtual std::vector<std::string> complete(Stage stage, const std::string& prompt,
                                            const SamplingParams& params) = 0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
  std::optional<double> retry_after_s;
};

// One JSON POST to the configured endpoint. Throws GatewayError when no
// response arrives at all.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post_json(const std::string& body) = 0;
};

// endpoint: full URL such as https://host/v1/chat/completions.
std::shared_ptr<Transport> make_http_transport(const std::string& endpoint, const std::string& api_key,
                                               double timeout_s = 120.0);

struct RetryPolicy {
  int max_attempts = 5;
  double base_delay_s = 0.5;
  double max_delay_s = 30.0;
  std::function<void(double seconds)> sleep;  // defaults to this_thread::sleep_for
};

// Delay before attempt `attempt` + 1 (attempt counts from 1).
double backoff_delay(const RetryPolicy& policy, int attempt, std::optional<double> retry_after_s);

// Chat-completion client with retries and a cap on in-flight requests.
class LiveBackend : public Backend {
 public:
  LiveBackend(std::shared_ptr<Transport> transport, std::string model, RetryPolicy retry = {},
              int max_in_flight = 4);
  ~LiveBackend() override;
  BackendKind kind() const override { return BackendKind::live; }
  std::vector<std::string> complete(Stage stage, const std::string& prompt, const SamplingParams& params) override;

  int max_in_flight_observed() const;

 private:
  struct State;
  std::shared_ptr<Transport> transport_;
  std::string model_;
  RetryPolicy retry_;
  std::unique_ptr<State> state_;
};

// One JSON file per digest: { stage, prompt, params, completions, digest }.
// Concurrent reads, serialized writes, atomic rename on save.
class FixtureStore {
 public:
  explicit FixtureStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_for(Stage stage, std::string_view prompt) const;

  std::optional<std::vector<std::string>> load(Stage stage, const std::string& prompt) const;
  void save(Stage stage, const std::string& prompt, const SamplingParams& params,
            const std::vector<std::string>& completions);

 private:
  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
};

class RecordBackend : public Backend {
 public:
  RecordBackend(std::shared_ptr<Backend> upstream, std::shared_ptr<FixtureStore> store);
  BackendKind kind() const override { return BackendKind::record; }
  std::vector<std::string> complete(Stage stage, const std::string& prompt, const SamplingParams& params) override;

 private:
  std::shared_ptr<Backend> upstream_;
  std::shared_ptr<FixtureStore> store_;
};

class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(std::shared_ptr<FixtureStore> store);
  BackendKind kind() const override { return BackendKind::replay; }
  std::vector<std::string> complete(Stage stage, const std::string& prompt, const SamplingParams& params) override;

 private:
  std::shared_ptr<FixtureStore> store_;
};

// Front door used by the pipeline: stamps timing, records failures as
// exchanges, and appends every exchange to the caller's per-example log.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<Backend> backend);

  BackendKind backend_kind() const { return backend_->kind(); }

  // Transport failures are returned as a failed exchange. ConfigError
  // (replay miss, bad params) propagates.
  LlmExchange complete(Stage stage, const std::string& prompt, const SamplingParams& params,
                       std::vector<LlmExchange>& log);

 private:
  std::shared_ptr<Backend> backend_;
};

}  // namespace tabsense
