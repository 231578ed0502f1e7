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

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "tabsense/error.hpp"
#include "tabsense/eval.hpp"

namespace tabsense {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- configuration ----

json config_to_json(const RunConfig& c) {
  return {{"dataset", c.dataset},
          {"format", dataset_format_name(c.format)},
          {"backend", backend_name(c.backend)},
          {"endpoint", c.endpoint},
          {"model", c.model},
          {"api_key_env", c.api_key_env},
          {"fixtures_dir", c.fixtures_dir},
          {"timeout_s", c.timeout_s},
          {"max_attempts", c.max_attempts},
          {"max_in_flight", c.max_in_flight},
          {"profile", c.profile},
          {"stage_overrides", c.stage_overrides},
          {"extraction_mode", extraction_mode_name(c.extraction_mode)},
          {"reasoning_mode", reasoning_mode_name(c.reasoning_mode)},
          {"bucket_small_below", c.thresholds.small_below},
          {"bucket_medium_upto", c.thresholds.medium_upto},
          {"sql_token_budget", c.sql_token_budget},
          {"math_keywords", c.math_keywords},
          {"prompt_dir", c.prompt_dir},
          {"workers", c.workers},
          {"output_dir", c.output_dir},
          {"seed", c.seed},
          {"limit", c.limit ? json(*c.limit) : json(nullptr)}};
}

namespace {

template <class T, class Parse>
T parse_enum(const json& v, const char* key, Parse parse) {
  auto r = parse(v.get<std::string>());
  if (!r) throw ConfigError(std::string("invalid value for \"") + key + "\": " + v.get<std::string>());
  return *r;
}

}  // namespace

RunConfig config_from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "dataset") c.dataset = v.get<std::string>();
      else if (key == "format") c.format = parse_enum<DatasetFormat>(v, "format", parse_dataset_format);
      else if (key == "backend") c.backend = parse_enum<BackendKind>(v, "backend", parse_backend);
      else if (key == "endpoint") c.endpoint = v.get<std::string>();
      else if (key == "model") c.model = v.get<std::string>();
      else if (key == "api_key_env") c.api_key_env = v.get<std::string>();
      else if (key == "fixtures_dir") c.fixtures_dir = v.get<std::string>();
      else if (key == "timeout_s") c.timeout_s = v.get<double>();
      else if (key == "max_attempts") c.max_attempts = v.get<int>();
      else if (key == "max_in_flight") c.max_in_flight = v.get<int>();
      else if (key == "profile") c.profile = v.get<std::string>();
      else if (key == "stage_overrides") c.stage_overrides = v;
      else if (key == "extraction_mode")
        c.extraction_mode = parse_enum<ExtractionMode>(v, "extraction_mode", parse_extraction_mode);
      else if (key == "reasoning_mode")
        c.reasoning_mode = parse_enum<ReasoningMode>(v, "reasoning_mode", parse_reasoning_mode);
      else if (key == "bucket_small_below") c.thresholds.small_below = v.get<std::int64_t>();
      else if (key == "bucket_medium_upto") c.thresholds.medium_upto = v.get<std::int64_t>();
      else if (key == "sql_token_budget") c.sql_token_budget = v.get<std::int64_t>();
      else if (key == "math_keywords") c.math_keywords = v.get<std::vector<std::string>>();
      else if (key == "prompt_dir") c.prompt_dir = v.get<std::string>();
      else if (key == "workers") c.workers = v.get<int>();
      else if (key == "output_dir") c.output_dir = v.get<std::string>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "limit") c.limit = v.is_null() ? std::nullopt : std::optional<std::size_t>(v.get<std::size_t>());
      else throw ConfigError("unknown config key \"" + key + "\"");
    } catch (const json::exception& e) {
      throw ConfigError("bad value for \"" + key + "\": " + e.what());
    }
  }
  return c;
}

Profile resolve_profile(const RunConfig& c, TaskKind task) {
  std::string name = c.profile.find('-') != std::string::npos ? c.profile : profile_for_task(c.profile, task);
  Profile p = builtin_profile(name);
  if (!c.stage_overrides.is_object()) throw ConfigError("stage_overrides must be an object");
  for (const auto& [stage_key, ov] : c.stage_overrides.items()) {
    auto stage = parse_stage(stage_key);
    if (!stage) throw ConfigError("stage_overrides: unknown stage \"" + stage_key + "\"");
    if (!ov.is_object()) throw ConfigError("stage_overrides." + stage_key + " must be an object");
    StageProfile& sp = p.stages[*stage];
    for (const auto& [k, v] : ov.items()) {
      try {
        if (k == "temperature") sp.params.temperature = v.get<double>();
        else if (k == "top_p") sp.params.top_p = v.get<double>();
        else if (k == "max_output_tokens") sp.params.max_output_tokens = v.get<int>();
        else if (k == "n_samples") sp.params.n_samples = v.get<int>();
        else if (k == "examples") sp.examples = v.get<int>();
        else throw ConfigError("stage_overrides." + stage_key + ": unknown key \"" + k + "\"");
      } catch (const json::exception& e) {
        throw ConfigError("stage_overrides." + stage_key + "." + k + ": " + e.what());
      }
    }
    sp.params.validate();
    if (sp.examples < 0) throw ConfigError("stage_overrides." + stage_key + ".examples must be >= 0");
  }
  return p;
}

void validate_config(const RunConfig& c, bool require_dataset) {
  if (require_dataset && c.dataset.empty()) throw ConfigError("dataset path is required");
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  if (c.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (c.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  if (!(c.timeout_s > 0)) throw ConfigError("timeout_s must be > 0");
  if (c.sql_token_budget < 1) throw ConfigError("sql_token_budget must be >= 1");
  if (c.thresholds.small_below > c.thresholds.medium_upto + 1)
    throw ConfigError("bucket_small_below must not exceed bucket_medium_upto + 1");
  if (c.output_dir.empty()) throw ConfigError("output_dir is required");
  if (c.backend != BackendKind::live && c.fixtures_dir.empty())
    throw ConfigError(std::string(backend_name(c.backend)) + " backend needs fixtures_dir");
  if (c.backend == BackendKind::replay && !fs::is_directory(c.fixtures_dir))
    throw ConfigError("fixtures_dir not found: " + c.fixtures_dir);
  for (TaskKind t : {TaskKind::fact_verification, TaskKind::short_qa}) (void)resolve_profile(c, t);
}

std::shared_ptr<Backend> make_backend(const RunConfig& c, std::shared_ptr<Backend> upstream) {
  auto live = [&]() -> std::shared_ptr<Backend> {
    if (upstream) return upstream;
    const char* key = std::getenv(c.api_key_env.c_str());
    if (!key || !*key) throw ConfigError("environment variable " + c.api_key_env + " is not set");
    RetryPolicy retry;
    retry.max_attempts = c.max_attempts;
    return std::make_shared<LiveBackend>(make_http_transport(c.endpoint, key, c.timeout_s), c.model, retry,
                                         c.max_in_flight);
  };
  switch (c.backend) {
    case BackendKind::live: return live();
    case BackendKind::record:
      return std::make_shared<RecordBackend>(live(), std::make_shared<FixtureStore>(c.fixtures_dir));
    case BackendKind::replay: return std::make_shared<ReplayBackend>(std::make_shared<FixtureStore>(c.fixtures_dir));
  }
  throw ConfigError("unknown backend");
}

// ---- one example ----

EvalRecord run_example(const ExampleRecord& ex, std::size_t index, ExampleEnv& env) {
  auto start = std::chrono::steady_clock::now();
  const RunConfig& c = env.config;
  EvalRecord r;
  r.index = index;
  r.id = ex.id;
  r.task = ex.task;
  r.question = ex.question;
  r.gold = ex.gold;
  r.extraction_mode = c.extraction_mode;
  r.reasoning_mode = c.reasoning_mode;
  r.extraction.question = ex.question;
  r.extraction.mode = c.extraction_mode;
  r.reasoning.mode = c.reasoning_mode;

  try {
    Table t = load_table(ex.table);
    r.token_estimate = static_cast<std::int64_t>(token_estimate(encode_pipe(t)));
    r.bucket = bucket(r.token_estimate, c.thresholds);
    Profile profile = resolve_profile(c, ex.task);
    r.profile = profile.name;
    PipelineContext ctx{env.gateway, env.prompts, profile, {c.sql_token_budget, c.math_keywords}, r.exchanges};
    ExtractionResult er = extract(ctx, t, ex.question, c.extraction_mode);
    r.extraction = std::move(er.trace);
    ReasoningResult rr = reason(ctx, er.t_cr, ex.question, ex.task, c.reasoning_mode);
    r.t_cr = std::move(er.t_cr);
    r.answer = std::move(rr.answer);
    r.evidence = std::move(rr.evidence);
    r.reasoning = std::move(rr.trace);
  } catch (const Error& e) {
    r.error = e.what();
    r.error_code = e.code();
    r.answer = Answer{};
    r.answer.abstained = true;
    r.evidence.reset();
  } catch (const std::exception& e) {
    r.error = e.what();
    r.answer = Answer{};
    r.answer.abstained = true;
    r.evidence.reset();
  }

  switch (ex.task) {
    case TaskKind::fact_verification:
      r.correct = !r.answer.abstained && r.answer.label && ex.gold == label_name(*r.answer.label);
      break;
    case TaskKind::short_qa: r.correct = !r.answer.abstained && exact_match(r.answer.text, ex.gold); break;
    case TaskKind::long_qa: {
      std::string pred = r.answer.abstained ? std::string() : r.answer.text;
      r.rouge1 = rouge_n(pred, ex.gold, 1);
      r.rouge2 = rouge_n(pred, ex.gold, 2);
      r.rougeL = rouge_l(pred, ex.gold);
      break;
    }
  }
  r.generation_budget = generation_budget(r.exchanges);
  r.classify_samples = classify_samples(r.exchanges);
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// ---- batch ----

namespace {

std::string trace_filename(std::size_t index, const std::string& id) {
  std::string safe;
  for (char ch : id) {
    bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '-' ||
              ch == '_' || ch == '.';
    safe += ok ? ch : '_';
    if (safe.size() == 64) break;
  }
  char num[16];
  std::snprintf(num, sizeof num, "%05zu", index);
  return std::string(num) + "_" + safe + ".json";
}

void write_file(const fs::path& p, const std::string& data) {
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << data;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

json telemetry_json(const EvalRecord& r) {
  json ex = json::array();
  for (const auto& e : r.exchanges) {
    ex.push_back({{"stage", stage_name(e.stage)},
                  {"backend", backend_name(e.backend)},
                  {"timestamp_ms", e.timestamp_ms},
                  {"latency_ms", e.latency_ms},
                  {"failed", e.failed}});
  }
  return {{"index", r.index}, {"id", r.id}, {"wall_ms", r.wall_ms}, {"exchanges", ex}};
}

}  // namespace

RunResult run_dataset(const RunConfig& c, const RunHooks& hooks) {
  validate_config(c);
  DatasetLoad data = load_dataset(c.dataset, c.format);
  if (c.limit && data.records.size() > *c.limit) data.records.resize(*c.limit);

  PromptLibrary prompts = PromptLibrary::load(c.prompt_dir.empty() ? PromptLibrary::default_dir() : fs::path(c.prompt_dir));
  Gateway gateway(make_backend(c, hooks.upstream));

  fs::path out = c.output_dir;
  fs::path traces = out / "traces";
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  // Stale traces from an earlier run would leak into a recomputed report.
  fs::remove_all(traces, ec);
  fs::create_directories(traces, ec);
  if (ec) throw IoError("cannot create " + traces.string() + ": " + ec.message());
  write_file(out / "effective_config.json", config_to_json(c).dump(2) + "\n");

  std::vector<std::size_t> order(data.records.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(c.seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::optional<EvalRecord>> slots(data.records.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr fatal;
  auto stopped = [&] { return hooks.stop && hooks.stop->load(); };

  auto worker = [&] {
    ExampleEnv env{gateway, prompts, c};
    while (!stopped()) {
      std::size_t k = next.fetch_add(1);
      if (k >= order.size()) return;
      std::size_t i = order[k];
      try {
        EvalRecord r = run_example(data.records[i], i, env);
        write_file(traces / trace_filename(i, r.id), record_to_json(r).dump(2) + "\n");
        slots[i] = std::move(r);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!fatal) fatal = std::current_exception();
        return;
      }
    }
  };
  std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(c.workers), std::max<std::size_t>(order.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (fatal) std::rethrow_exception(fatal);

  RunResult res;
  res.rejects = std::move(data.rejects);
  std::vector<RecordSummary> summaries;
  std::string telemetry;
  for (auto& s : slots) {
    if (!s) continue;
    summaries.push_back(summary_from_json(json::parse(record_to_json(*s).dump())));
    telemetry += telemetry_json(*s).dump() + "\n";
    res.records.push_back(std::move(*s));
  }
  res.interrupted = res.records.size() < data.records.size();
  res.report = compute_report(summaries, res.interrupted);

  write_file(out / "report.json", res.report.json.dump(2) + "\n");
  write_file(out / "report.txt", res.report.text);
  std::string rejects;
  for (const auto& r : res.rejects) rejects += json{{"line", r.line}, {"reason", r.reason}}.dump() + "\n";
  write_file(out / "rejects.jsonl", rejects);
  write_file(out / "telemetry.jsonl", telemetry);
  return res;
}

}  // namespace tabsense
