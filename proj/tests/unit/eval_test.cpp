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

#include <gtest/gtest.h>

#include <set>

#include "scripted_backend.hpp"
#include "tabsense/error.hpp"
#include "tabsense/eval.hpp"
#include "temp_dir.hpp"

namespace tabsense {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::read_text;
using testing::TempDir;
using testing::write_text;

const fs::path kData = TABSENSE_TEST_DATA_DIR;

std::shared_ptr<Backend> suite_backend() {
  return std::make_shared<testing::ScriptedBackend>(
      testing::script_from_json(json::parse(read_text(kData / "suite_script.json"))));
}

RunConfig suite_config(const TempDir& dir, BackendKind backend) {
  RunConfig c;
  c.dataset = (kData / "suite.jsonl").string();
  c.backend = backend;
  c.fixtures_dir = (dir / "fixtures").string();
  c.output_dir = (dir / "out").string();
  c.workers = 3;
  c.seed = 7;
  return c;
}

TEST(Dataset, NeutralLine) {
  json j = json::parse(R"({"id":"a","task":"fact_verification","table":{"caption":"c","header":["x","y"],
    "rows":[["1","2"]]},"question":"q","gold":1})");
  ExampleRecord r = parse_example(j, DatasetFormat::neutral, 1);
  EXPECT_EQ(r.gold, "entailed");
  EXPECT_EQ(r.table.caption, "c");
  j["gold"] = "false";
  EXPECT_EQ(parse_example(j, DatasetFormat::neutral, 1).gold, "refuted");
  j["gold"] = "maybe";
  EXPECT_THROW(parse_example(j, DatasetFormat::neutral, 1), DatasetError);
}

TEST(Dataset, BenchmarkAdapters) {
  json tf = json::parse(R"({"statement":"s","label":0,"table_text":[["a","b"],["1","2"]],"table_caption":"cap"})");
  ExampleRecord r = parse_example(tf, DatasetFormat::tabfact, 4);
  EXPECT_EQ(r.task, TaskKind::fact_verification);
  EXPECT_EQ(r.gold, "refuted");
  EXPECT_EQ(r.id, "line-4");
  EXPECT_EQ(r.table.header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(r.table.rows.size(), 1u);

  json wq = json::parse(R"({"id":"nt-1","question":"q","table":{"header":["a"],"rows":[["x"],["y"]],
    "page_title":"p"},"answer_text":["x","y"]})");
  r = parse_example(wq, DatasetFormat::wikitq, 1);
  EXPECT_EQ(r.gold, "x|y");
  EXPECT_EQ(r.table.caption, "p");

  json fq = json::parse(R"({"feta_id":12,"table_array":[["a"],["1"]],"table_page_title":"P",
    "table_section_title":"S","question":"q","answer":"long answer"})");
  r = parse_example(fq, DatasetFormat::fetaqa, 1);
  EXPECT_EQ(r.id, "12");
  EXPECT_EQ(r.task, TaskKind::long_qa);
  EXPECT_EQ(r.table.caption, "P - S");
}

TEST(Dataset, RaggedAndMalformedLinesAreRejected) {
  TempDir dir("ds");
  std::string good = R"({"id":"g","task":"short_qa","table":{"header":["a"],"rows":[["1"]]},"question":"q","gold":"1"})";
  std::string ragged = R"({"id":"r","task":"short_qa","table":{"header":["a","b"],"rows":[["1"]]},"question":"q","gold":"1"})";
  write_text(dir / "d.jsonl", good + "\n" + ragged + "\n\n" + good + "\n{not json\n" + good + "\n");
  DatasetLoad d = load_dataset(dir / "d.jsonl");
  EXPECT_EQ(d.records.size(), 3u);
  ASSERT_EQ(d.rejects.size(), 2u);
  EXPECT_EQ(d.rejects[0].line, 2u);
  EXPECT_NE(d.rejects[0].reason.find("ragged"), std::string::npos);
  EXPECT_EQ(d.rejects[1].line, 5u);

  write_text(dir / "bad.jsonl", good + "\n" + ragged + "\n" + ragged + "\n");
  EXPECT_THROW(load_dataset(dir / "bad.jsonl"), DatasetError);
  write_text(dir / "empty.jsonl", "\n\n");
  EXPECT_THROW(load_dataset(dir / "empty.jsonl"), DatasetError);
  EXPECT_THROW(load_dataset(dir / "missing.jsonl"), IoError);
}

TEST(Dataset, SuiteLoadsCleanly) {
  DatasetLoad d = load_dataset(kData / "suite.jsonl");
  EXPECT_EQ(d.records.size(), 20u);
  EXPECT_TRUE(d.rejects.empty());
  std::map<TaskKind, int> per_task;
  for (const auto& r : d.records) ++per_task[r.task];
  EXPECT_EQ(per_task[TaskKind::fact_verification], 5);
  EXPECT_EQ(per_task[TaskKind::short_qa], 10);
  EXPECT_EQ(per_task[TaskKind::long_qa], 5);
}

RecordSummary fv(bool correct) {
  RecordSummary s;
  s.task = TaskKind::fact_verification;
  s.correct = correct;
  return s;
}

TEST(Report, TabfactAccuracy) {
  EXPECT_DOUBLE_EQ(tabfact_accuracy({fv(true), fv(true), fv(false), fv(true), fv(true)}), 0.8);
  try {
    tabfact_accuracy({});
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_STREQ(e.what(), "no records");
  }
  RecordSummary qa;
  qa.task = TaskKind::short_qa;
  EXPECT_THROW(tabfact_accuracy({qa}), DatasetError);
}

TEST(Report, CellStats) {
  RecordSummary a, b;
  a.cells_t = 100, a.cells_tc = 40, a.cells_tcr = 8;
  b.cells_t = 50, b.cells_tc = 20, b.cells_tcr = 2;
  CellStats s = cell_reduction_stats({a, b});
  EXPECT_DOUBLE_EQ(s.avg_t, 75);
  EXPECT_DOUBLE_EQ(s.avg_tc, 30);
  EXPECT_DOUBLE_EQ(s.avg_tcr, 5);
  EXPECT_DOUBLE_EQ(cell_reduction_stats({}).avg_t, 0);
}

TEST(Report, EmptyInputStillRenders) {
  RunReport r = compute_report({}, true);
  EXPECT_EQ(r.json["examples"], 0);
  EXPECT_TRUE(r.json["interrupted"].get<bool>());
  EXPECT_TRUE(r.json["metrics"]["short_qa"]["exact_match"].is_null());
  EXPECT_NE(r.text.find("interrupted"), std::string::npos);
}

TEST(Report, EmptyTraceDirectoryIsAnError) {
  TempDir dir("empty");
  EXPECT_THROW(load_trace_summaries(dir.path()), DatasetError);
  EXPECT_THROW(load_trace_summaries(dir / "missing"), IoError);
}

TEST(Config, RoundTripAndUnknownKeys) {
  RunConfig c;
  c.dataset = "d.jsonl";
  c.profile = "palm2";
  c.extraction_mode = ExtractionMode::no_row;
  c.reasoning_mode = ReasoningMode::sql_only;
  c.limit = 5;
  c.stage_overrides = {{"col_sql", {{"n_samples", 3}}}};
  json j = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(j)), j);
  EXPECT_THROW(config_from_json({{"workerz", 2}}), ConfigError);
  EXPECT_THROW(config_from_json({{"extraction_mode", "half"}}), ConfigError);
  EXPECT_THROW(config_from_json({{"workers", "many"}}), ConfigError);
}

TEST(Config, ProfileResolutionAndOverrides) {
  RunConfig c;
  EXPECT_EQ(resolve_profile(c, TaskKind::fact_verification).name, "gpt35-tabfact");
  EXPECT_EQ(resolve_profile(c, TaskKind::long_qa).name, "gpt35-wikitq");
  c.profile = "palm2-tabfact";
  EXPECT_EQ(resolve_profile(c, TaskKind::short_qa).name, "palm2-tabfact");
  c.stage_overrides = {{"row_text", {{"n_samples", 4}, {"examples", 1}}}};
  Profile p = resolve_profile(c, TaskKind::short_qa);
  EXPECT_EQ(p.at(Stage::row_text).params.n_samples, 4);
  EXPECT_EQ(p.at(Stage::row_text).examples, 1);
  c.stage_overrides = {{"row_txt", json::object()}};
  EXPECT_THROW(resolve_profile(c, TaskKind::short_qa), ConfigError);
  c.stage_overrides = {{"row_text", {{"n_samples", 0}}}};
  EXPECT_THROW(resolve_profile(c, TaskKind::short_qa), ConfigError);
  c.stage_overrides = json::object();
  c.profile = "gpt4";
  EXPECT_THROW(resolve_profile(c, TaskKind::short_qa), ConfigError);
}

TEST(Config, Validation) {
  TempDir dir("cfg");
  RunConfig c = suite_config(dir, BackendKind::replay);
  EXPECT_THROW(validate_config(c), ConfigError);  // fixtures dir missing
  fs::create_directories(c.fixtures_dir);
  EXPECT_NO_THROW(validate_config(c));
  c.workers = 0;
  EXPECT_THROW(validate_config(c), ConfigError);
  c.workers = 1;
  c.backend = BackendKind::live;
  c.api_key_env = "TABSENSE_TEST_SURELY_UNSET_KEY";
  EXPECT_THROW(make_backend(c), ConfigError);
  EXPECT_NO_THROW(make_backend(c, suite_backend()));
}

TEST(Runner, SuiteRecordThenReplayIsByteIdentical) {
  TempDir dir("run");
  RunConfig rec = suite_config(dir, BackendKind::record);
  RunHooks hooks;
  hooks.upstream = suite_backend();
  RunResult a = run_dataset(rec, hooks);
  ASSERT_EQ(a.records.size(), 20u);
  EXPECT_FALSE(a.interrupted);
  for (const auto& r : a.records) {
    EXPECT_FALSE(r.error.has_value()) << r.id << ": " << *r.error;
    EXPECT_GE(r.generation_budget, 6) << r.id;
    EXPECT_LE(r.generation_budget, 10) << r.id;
  }
  EXPECT_DOUBLE_EQ(a.report.json["metrics"]["fact_verification"]["accuracy"].get<double>(), 0.8);
  EXPECT_DOUBLE_EQ(a.report.json["metrics"]["short_qa"]["exact_match"].get<double>(), 1.0);

  fs::path first = dir / "first";
  fs::rename(rec.output_dir, first);
  RunConfig rep = suite_config(dir, BackendKind::replay);
  rep.workers = 1;
  rep.seed = 99;
  RunResult b = run_dataset(rep);
  ASSERT_EQ(b.records.size(), 20u);

  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(first / "traces")) names.insert(e.path().filename().string());
  ASSERT_EQ(names.size(), 20u);
  for (const auto& n : names) {
    EXPECT_EQ(read_text(first / "traces" / n), read_text(fs::path(rep.output_dir) / "traces" / n)) << n;
  }
  EXPECT_EQ(read_text(first / "report.json"), read_text(fs::path(rep.output_dir) / "report.json"));
  EXPECT_EQ(read_text(first / "report.txt"), read_text(fs::path(rep.output_dir) / "report.txt"));

  // The report recomputed from traces alone matches the one written at run time.
  RunReport again = compute_report(load_trace_summaries(first));
  EXPECT_EQ(again.json.dump(2) + "\n", read_text(first / "report.json"));
  EXPECT_EQ(again.text, read_text(first / "report.txt"));
}

TEST(Runner, StopFlagYieldsPartialReport) {
  TempDir dir("stop");
  RunConfig c = suite_config(dir, BackendKind::live);
  std::atomic<bool> stop{true};
  RunHooks hooks{suite_backend(), &stop};
  RunResult r = run_dataset(c, hooks);
  EXPECT_TRUE(r.interrupted);
  EXPECT_TRUE(r.records.empty());
  EXPECT_TRUE(r.report.json["interrupted"].get<bool>());
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "report.txt"));
}

TEST(Runner, PerExampleFailureBecomesErrorRecord) {
  TempDir dir("err");
  RunConfig c = suite_config(dir, BackendKind::replay);
  fs::create_directories(c.fixtures_dir);  // empty: every lookup misses
  c.limit = 2;
  RunResult r = run_dataset(c);
  ASSERT_EQ(r.records.size(), 2u);
  for (const auto& rec : r.records) {
    ASSERT_TRUE(rec.error.has_value());
    EXPECT_NE(rec.error->find("replay miss"), std::string::npos) << *rec.error;
    EXPECT_TRUE(rec.answer.abstained);
    EXPECT_EQ(rec.correct, false);
  }
  EXPECT_EQ(r.report.json["errored"], 2);
}

TEST(Runner, ScoresLongAnswersWithRouge) {
  TempDir dir("long");
  RunConfig c = suite_config(dir, BackendKind::live);
  RunHooks hooks{suite_backend(), nullptr};
  RunResult r = run_dataset(c, hooks);
  int long_n = 0;
  for (const auto& rec : r.records) {
    if (rec.task != TaskKind::long_qa) continue;
    ++long_n;
    ASSERT_TRUE(rec.rougeL.has_value());
    EXPECT_GT(rec.rougeL->f1, 0.2) << rec.id;
    EXPECT_LT(rec.rougeL->f1, 1.0) << rec.id;
    EXPECT_FALSE(rec.correct.has_value());
  }
  EXPECT_EQ(long_n, 5);
  // Telemetry carries what the traces leave out.
  std::string tel = read_text(fs::path(c.output_dir) / "telemetry.jsonl");
  EXPECT_NE(tel.find("latency_ms"), std::string::npos);
  std::string trace = read_text(fs::path(c.output_dir) / "traces" / "00000_nya-cup-gap.json");
  EXPECT_EQ(trace.find("latency_ms"), std::string::npos);
  EXPECT_EQ(trace.find("timestamp"), std::string::npos);
}

}  // namespace
}  // namespace tabsense
