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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabsense/gateway.hpp"
#include "tabsense/query.hpp"
#include "tabsense/table.hpp"

namespace tabsense {

enum class TaskKind { fact_verification, short_qa, long_qa };
enum class ExtractionMode { full, no_column, no_row, none };
enum class ReasoningMode { adaptive, text_only, sql_only };
enum class Label { entailed, refuted };

enum class StageOutcome { ok, parse_failure, exec_failure, empty_fallback, skipped, gateway_failure };

const char* task_name(TaskKind k);
std::optional<TaskKind> parse_task(std::string_view s);
const char* extraction_mode_name(ExtractionMode m);
std::optional<ExtractionMode> parse_extraction_mode(std::string_view s);
const char* reasoning_mode_name(ReasoningMode m);
std::optional<ReasoningMode> parse_reasoning_mode(std::string_view s);
const char* label_name(Label l);
const char* outcome_name(StageOutcome o);
std::optional<StageOutcome> parse_outcome(std::string_view s);

// ---- profiles ----

struct StageProfile {
  SamplingParams params;
  int examples = 0;  // few-shot demonstrations to include
};

struct Profile {
  std::string name;
  std::map<Stage, StageProfile> stages;

  const StageProfile& at(Stage s) const;
};

// gpt35-wikitq, gpt35-tabfact, palm2-wikitq, palm2-tabfact.
Profile builtin_profile(std::string_view name);
std::vector<std::string> builtin_profile_names();

// Profile family ("gpt35", "palm2") plus task -> the matching dataset
// profile. FeTaQA-style long answers reuse the WikiTQ settings.
std::string profile_for_task(std::string_view family, TaskKind task);

// ---- prompts ----

// Per-stage template files with {table} {question} {prior_selection}
// {evidence} {few_shots} slots, and demonstration files whose blocks are
// separated by lines holding only "---". A task-specific file
// <stage>.<task>.txt / .shots.txt takes precedence over <stage>.txt.
class PromptLibrary {
 public:
  static PromptLibrary load(const std::filesystem::path& dir);
  static std::filesystem::path default_dir();

  std::string render(Stage stage, std::optional<TaskKind> task, const std::map<std::string, std::string>& slots,
                     int examples) const;

  std::size_t demo_count(Stage stage, std::optional<TaskKind> task) const;

 private:
  struct Entry {
    std::string tmpl;
    std::vector<std::string> demos;
  };
  const Entry& find(Stage stage, std::optional<TaskKind> task) const;
  std::map<std::string, Entry> entries_;
};

// ---- completion parsing ----

// First fenced block, else the first line starting with SELECT (an "SQL:"
// prefix is allowed) plus its continuation lines.
std::optional<std::string> extract_sql(std::string_view completion);
// Last `columns: [...]` line.
std::optional<std::vector<std::string>> parse_column_list(std::string_view completion);
// Last `rows: [...]` line; items may be `3` or `row 3`.
std::optional<std::vector<std::int64_t>> parse_row_list(std::string_view completion);
// Text after the last `Answer:` marker, trimmed; nullopt when absent or empty.
std::optional<std::string> parse_answer(std::string_view completion);
std::optional<bool> parse_yes_no(std::string_view completion);
std::optional<Label> parse_label(std::string_view answer);

// ---- shared per-example context ----

struct PipelineOptions {
  std::int64_t sql_token_budget = 6000;
  std::vector<std::string> math_keywords;  // empty -> default_math_keywords()
};

const std::vector<std::string>& default_math_keywords();

struct PipelineContext {
  Gateway& gateway;
  const PromptLibrary& prompts;
  const Profile& profile;
  PipelineOptions options;
  std::vector<LlmExchange>& log;  // every exchange of this example, in call order
};

struct StageResult {
  Stage stage = Stage::col_sql;
  StageOutcome outcome = StageOutcome::skipped;
  std::vector<std::size_t> exchanges;  // indices into the example's log
  std::vector<std::string> queries;    // extracted SQL per sample, when applicable
  std::vector<std::string> notes;      // dropped names, sample errors, truncation
};

// ---- extraction ----

struct ExtractionTrace {
  std::string question;
  ExtractionMode mode = ExtractionMode::full;
  ColumnSet c1, c2, c_final;
  RowIdSet r1, r2, r_final;
  std::vector<StageResult> stages;  // col_sql, col_text, row_sql, row_text
  StageOutcome column_merge = StageOutcome::ok;
  StageOutcome row_merge = StageOutcome::ok;
  std::size_t cells_t = 0, cells_tc = 0, cells_tcr = 0;

  const StageResult& stage(Stage s) const;
};

struct ColumnStageResult {
  ColumnSet columns;
  StageResult record;
};

struct RowStageResult {
  RowIdSet rows;
  StageResult record;
};

ColumnStageResult col_sql(PipelineContext& ctx, const Table& t, const std::string& q);
// Valid names are read from the first cell of each transposed row.
ColumnStageResult col_text(PipelineContext& ctx, const Table& t_transposed, const std::string& q, const ColumnSet& c1);
RowStageResult row_sql(PipelineContext& ctx, const Table& t_c, const std::string& q);
RowStageResult row_text(PipelineContext& ctx, const Table& t_c, const std::string& q, const RowIdSet& r1);

struct ExtractionResult {
  Table t_c;
  Table t_cr;
  ExtractionTrace trace;
};

ExtractionResult extract(PipelineContext& ctx, const Table& t, const std::string& q, ExtractionMode mode);

// ---- reasoning ----

struct Evidence {
  std::string query_text;
  std::optional<ResultSet> result;
  std::string rendered;  // PIPE block of the result, empty on failure
  StageResult record;
};

struct Answer {
  std::string text;
  std::optional<Label> label;
  bool abstained = false;
  std::vector<std::string> raw_completions;
  int chosen_sample = -1;
  bool samples_disagreed = false;
};

struct ReasoningTrace {
  ReasoningMode mode = ReasoningMode::adaptive;
  bool classify_ran = false;
  bool is_math = false;
  bool classify_fallback = false;  // keyword list decided
  StageResult classify;
  StageResult answer;
};

struct ReasoningResult {
  Answer answer;
  std::optional<Evidence> evidence;
  ReasoningTrace trace;
};

bool keyword_math(std::string_view q, const std::vector<std::string>& keywords);
bool classify_math(PipelineContext& ctx, const std::string& q, ReasoningTrace& trace);
Evidence sql_evidence(PipelineContext& ctx, const Table& t_cr, const std::string& q);
Answer text_answer(PipelineContext& ctx, const Table& t_cr, const std::string& q, const Evidence* ev, TaskKind task,
                   StageResult& record);
// Maps the first evidence cell to an answer; abstains when there is none.
Answer evidence_answer(const Evidence& ev, TaskKind task);
ReasoningResult reason(PipelineContext& ctx, const Table& t_cr, const std::string& q, TaskKind task,
                       ReasoningMode mode);

}  // namespace tabsense
