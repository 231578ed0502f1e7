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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "tabsense/error.hpp"
#include "tabsense/gateway.hpp"
#include "tabsense/metrics.hpp"
#include "tabsense/pipeline.hpp"
#include "tabsense/table.hpp"

namespace tabsense {

// ---- datasets ----

enum class DatasetFormat { neutral, tabfact, wikitq, fetaqa };

const char* dataset_format_name(DatasetFormat f);
std::optional<DatasetFormat> parse_dataset_format(std::string_view s);

struct ExampleRecord {
  std::string id;
  TaskKind task = TaskKind::short_qa;
  TableSource table;
  std::string question;
  std::string gold;  // "entailed"/"refuted" for fact verification
  nlohmann::json metadata = nlohmann::json::object();
};

struct DatasetReject {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct DatasetLoad {
  std::vector<ExampleRecord> records;
  std::vector<DatasetReject> rejects;
};

// Parses one JSONL line in the given format. Throws DatasetError with the
// reason when the line is malformed.
ExampleRecord parse_example(const nlohmann::json& j, DatasetFormat format, std::size_t line);

// Malformed lines become rejects. Throws IoError when the file cannot be
// read and DatasetError when more than half of the lines are rejected or
// nothing is left.
DatasetLoad load_dataset(const std::filesystem::path& path, DatasetFormat format = DatasetFormat::neutral);

// ---- per-example records ----

struct EvalRecord {
  std::size_t index = 0;  // position in the dataset
  std::string id;
  TaskKind task = TaskKind::short_qa;
  std::string question;
  std::string gold;
  std::string profile;
  ExtractionMode extraction_mode = ExtractionMode::full;
  ReasoningMode reasoning_mode = ReasoningMode::adaptive;

  Answer answer;
  std::optional<Evidence> evidence;
  ExtractionTrace extraction;
  ReasoningTrace reasoning;
  std::vector<LlmExchange> exchanges;

  std::optional<bool> correct;  // fact verification and short QA
  std::optional<RougeScore> rouge1, rouge2, rougeL;  // long QA
  std::int64_t token_estimate = 0;  // of T's PIPE encoding
  Bucket bucket = Bucket::small;
  int generation_budget = 0;
  int classify_samples = 0;
  std::optional<std::string> error;  // set when the example was aborted
  std::optional<ErrorCode> error_code;  // unset for non-library exceptions

  // Not serialized.
  std::optional<Table> t_cr;

  double wall_ms = 0.0;  // telemetry only, never in the trace
};

// Trace document for one example. Excludes backend, timestamps and
// latencies so record and replay runs produce identical bytes.
nlohmann::json record_to_json(const EvalRecord& r);

// The fields a report needs, read back from a trace document.
struct RecordSummary {
  std::string id;
  TaskKind task = TaskKind::short_qa;
  bool abstained = false;
  bool errored = false;
  std::optional<bool> correct;
  std::optional<RougeScore> rouge1, rouge2, rougeL;
  std::int64_t token_estimate = 0;
  Bucket bucket = Bucket::small;
  std::size_t cells_t = 0, cells_tc = 0, cells_tcr = 0;
  int generation_budget = 0;
  int classify_samples = 0;
  bool evidence_used = false;
  std::map<std::string, std::string> stage_outcomes;  // stage -> outcome
  std::string extraction_mode, reasoning_mode;
};

RecordSummary summary_from_json(const nlohmann::json& trace);

// ---- aggregate metrics ----

// Fraction of fact-verification records whose label matches; abstentions
// count as wrong. Throws DatasetError("no records") on empty input.
double tabfact_accuracy(const std::vector<RecordSummary>& records);

struct CellStats {
  double avg_t = 0, avg_tc = 0, avg_tcr = 0;
};
CellStats cell_reduction_stats(const std::vector<RecordSummary>& records);

struct RunReport {
  nlohmann::json json;
  std::string text;
};

RunReport compute_report(const std::vector<RecordSummary>& records, bool interrupted = false);

// Reads <dir>/traces/*.json (or <dir>/*.json) in name order. Throws
// DatasetError when there are none.
std::vector<RecordSummary> load_trace_summaries(const std::filesystem::path& dir);

// ---- running ----

struct RunConfig {
  std::string dataset;
  DatasetFormat format = DatasetFormat::neutral;

  BackendKind backend = BackendKind::replay;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-3.5-turbo";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string fixtures_dir;
  double timeout_s = 120.0;
  int max_attempts = 5;
  int max_in_flight = 4;

  // "gpt35" / "palm2" pick the dataset profile per task; a full name such
  // as "gpt35-tabfact" forces one.
  std::string profile = "gpt35";
  // stage -> {temperature, top_p, max_output_tokens, n_samples, examples}
  nlohmann::json stage_overrides = nlohmann::json::object();

  ExtractionMode extraction_mode = ExtractionMode::full;
  ReasoningMode reasoning_mode = ReasoningMode::adaptive;
  BucketThresholds thresholds;
  std::int64_t sql_token_budget = 6000;
  std::vector<std::string> math_keywords;  // empty -> built-in list
  std::string prompt_dir;                  // empty -> built-in directory

  int workers = 4;
  std::string output_dir = "out";
  std::uint64_t seed = 0;  // only shuffles processing order
  std::optional<std::size_t> limit;
};

nlohmann::json config_to_json(const RunConfig& c);
// Unknown keys are rejected; missing keys keep the values already in `base`.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
// `require_dataset` is false for single-question use.
void validate_config(const RunConfig& c, bool require_dataset = true);

// Profile for one task after applying stage overrides.
Profile resolve_profile(const RunConfig& c, TaskKind task);

// Builds the backend stack the config asks for. `upstream` replaces the
// HTTP client in live and record modes (tests).
std::shared_ptr<Backend> make_backend(const RunConfig& c, std::shared_ptr<Backend> upstream = nullptr);

struct ExampleEnv {
  Gateway& gateway;
  const PromptLibrary& prompts;
  const RunConfig& config;
};

// Runs extraction and reasoning for one example and scores it. Never
// throws for per-example failures; they become an error record.
EvalRecord run_example(const ExampleRecord& ex, std::size_t index, ExampleEnv& env);

struct RunResult {
  std::vector<EvalRecord> records;  // dataset order
  std::vector<DatasetReject> rejects;
  RunReport report;
  bool interrupted = false;
};

struct RunHooks {
  std::shared_ptr<Backend> upstream;    // see make_backend
  const std::atomic<bool>* stop = nullptr;  // set to drain early
};

// Full batch run. Writes effective_config.json, traces/, report.json,
// report.txt, rejects.jsonl and telemetry.jsonl under output_dir.
RunResult run_dataset(const RunConfig& c, const RunHooks& hooks = {});

}  // namespace tabsense
