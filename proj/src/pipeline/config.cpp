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

#include <fstream>
#include <sstream>

#include "tabsense/error.hpp"
#include "tabsense/pipeline.hpp"
#include "text_util.hpp"

#ifndef TABSENSE_PROMPT_DIR
#define TABSENSE_PROMPT_DIR "prompts"
#endif

namespace tabsense {

namespace fs = std::filesystem;

const char* task_name(TaskKind k) {
  switch (k) {
    case TaskKind::fact_verification: return "fact_verification";
    case TaskKind::short_qa: return "short_qa";
    case TaskKind::long_qa: return "long_qa";
  }
  return "short_qa";
}

std::optional<TaskKind> parse_task(std::string_view s) {
  for (TaskKind k : {TaskKind::fact_verification, TaskKind::short_qa, TaskKind::long_qa}) {
    if (s == task_name(k)) return k;
  }
  return std::nullopt;
}

const char* extraction_mode_name(ExtractionMode m) {
  switch (m) {
    case ExtractionMode::full: return "full";
    case ExtractionMode::no_column: return "no_column";
    case ExtractionMode::no_row: return "no_row";
    case ExtractionMode::none: return "none";
  }
  return "full";
}

std::optional<ExtractionMode> parse_extraction_mode(std::string_view s) {
  for (ExtractionMode m : {ExtractionMode::full, ExtractionMode::no_column, ExtractionMode::no_row, ExtractionMode::none}) {
    if (s == extraction_mode_name(m)) return m;
  }
  return std::nullopt;
}

const char* reasoning_mode_name(ReasoningMode m) {
  switch (m) {
    case ReasoningMode::adaptive: return "adaptive";
    case ReasoningMode::text_only: return "text_only";
    case ReasoningMode::sql_only: return "sql_only";
  }
  return "adaptive";
}

std::optional<ReasoningMode> parse_reasoning_mode(std::string_view s) {
  for (ReasoningMode m : {ReasoningMode::adaptive, ReasoningMode::text_only, ReasoningMode::sql_only}) {
    if (s == reasoning_mode_name(m)) return m;
  }
  return std::nullopt;
}

const char* label_name(Label l) { return l == Label::entailed ? "entailed" : "refuted"; }

const char* outcome_name(StageOutcome o) {
  switch (o) {
    case StageOutcome::ok: return "ok";
    case StageOutcome::parse_failure: return "parse_failure";
    case StageOutcome::exec_failure: return "exec_failure";
    case StageOutcome::empty_fallback: return "empty_fallback";
    case StageOutcome::skipped: return "skipped";
    case StageOutcome::gateway_failure: return "gateway_failure";
  }
  return "ok";
}

std::optional<StageOutcome> parse_outcome(std::string_view s) {
  for (StageOutcome o : {StageOutcome::ok, StageOutcome::parse_failure, StageOutcome::exec_failure,
                         StageOutcome::empty_fallback, StageOutcome::skipped, StageOutcome::gateway_failure}) {
    if (s == outcome_name(o)) return o;
  }
  return std::nullopt;
}

// ---- profiles ----

const StageProfile& Profile::at(Stage s) const {
  auto it = stages.find(s);
  if (it == stages.end()) throw ConfigError("profile " + name + " has no settings for stage " + stage_name(s));
  return it->second;
}

namespace {

struct Row {
  Stage stage;
  double temperature;
  int max_tokens;
  int samples;
  int examples;
};

Profile make_profile(std::string name, std::initializer_list<Row> rows) {
  Profile p;
  p.name = std::move(name);
  for (const Row& r : rows) {
    StageProfile sp;
    sp.params = SamplingParams{r.temperature, 1.0, r.max_tokens, r.samples};
    sp.examples = r.examples;
    p.stages[r.stage] = sp;
  }
  // The question-type check runs greedy with one sample and a few tokens.
  p.stages[Stage::math_classify] = StageProfile{SamplingParams{0.0, 1.0, 8, 1}, 4};
  return p;
}

}  // namespace

Profile builtin_profile(std::string_view name) {
  using S = Stage;
  if (name == "gpt35-wikitq") {
    return make_profile(std::string(name), {{S::col_sql, 0.3, 512, 2, 3},
                                            {S::col_text, 0.4, 512, 2, 2},
                                            {S::row_sql, 0.4, 512, 2, 3},
                                            {S::row_text, 0.4, 512, 2, 3},
                                            {S::reason_sql, 0.1, 512, 1, 4},
                                            {S::reason_text, 0.1, 256, 1, 4}});
  }
  if (name == "gpt35-tabfact") {
    return make_profile(std::string(name), {{S::col_sql, 0.2, 512, 2, 4},
                                            {S::col_text, 0.4, 512, 2, 3},
                                            {S::row_sql, 0.4, 512, 2, 4},
                                            {S::row_text, 0.5, 512, 2, 3},
                                            {S::reason_sql, 0.1, 512, 1, 4},
                                            {S::reason_text, 0.1, 256, 1, 5}});
  }
  if (name == "palm2-wikitq") {
    return make_profile(std::string(name), {{S::col_sql, 0.4, 512, 2, 3},
                                            {S::col_text, 0.7, 512, 2, 3},
                                            {S::row_sql, 0.4, 512, 2, 3},
                                            {S::row_text, 0.7, 512, 2, 2},
                                            {S::reason_sql, 0.1, 512, 1, 3},
                                            {S::reason_text, 0.1, 256, 1, 4}});
  }
  if (name == "palm2-tabfact") {
    return make_profile(std::string(name), {{S::col_sql, 0.4, 512, 2, 4},
                                            {S::col_text, 0.7, 512, 2, 3},
                                            {S::row_sql, 0.4, 512, 2, 4},
                                            {S::row_text, 0.7, 512, 2, 3},
                                            {S::reason_sql, 0.1, 512, 1, 3},
                                            {S::reason_text, 0.1, 256, 1, 5}});
  }
  throw ConfigError("unknown profile: " + std::string(name));
}

std::vector<std::string> builtin_profile_names() {
  return {"gpt35-wikitq", "gpt35-tabfact", "palm2-wikitq", "palm2-tabfact"};
}

std::string profile_for_task(std::string_view family, TaskKind task) {
  if (family != "gpt35" && family != "palm2") throw ConfigError("unknown profile family: " + std::string(family));
  return std::string(family) + (task == TaskKind::fact_verification ? "-tabfact" : "-wikitq");
}

// ---- prompts ----

namespace {

const char* kSlots[] = {"table", "question", "prior_selection", "evidence", "few_shots"};

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

std::vector<std::string> split_demos(const std::string& text) {
  std::vector<std::string> demos;
  std::string cur;
  for (const auto& line : text::split_lines(text)) {
    if (text::trim(line) == "---") {
      if (!text::trim(cur).empty()) demos.push_back(strip_trailing_newlines(cur));
      cur.clear();
      continue;
    }
    cur += line;
    cur += '\n';
  }
  if (!text::trim(cur).empty()) demos.push_back(strip_trailing_newlines(cur));
  return demos;
}

void check_slots(const std::string& tmpl, const fs::path& file) {
  for (std::size_t i = tmpl.find('{'); i != std::string::npos; i = tmpl.find('{', i + 1)) {
    std::size_t close = tmpl.find('}', i);
    if (close == std::string::npos) break;
    std::string name = tmpl.substr(i + 1, close - i - 1);
    bool is_identifier = !name.empty();
    for (char c : name) is_identifier = is_identifier && (text::is_alpha(c) || c == '_');
    if (!is_identifier) continue;
    bool known = false;
    for (const char* s : kSlots) known = known || name == s;
    if (!known) throw ConfigError("unknown slot {" + name + "} in " + file.string());
  }
}

}  // namespace

fs::path PromptLibrary::default_dir() {
  if (const char* env = std::getenv("TABSENSE_PROMPT_DIR"); env && *env) return env;
  return TABSENSE_PROMPT_DIR;
}

PromptLibrary PromptLibrary::load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("prompt directory not found: " + dir.string());
  PromptLibrary lib;
  for (Stage s : kAllStages) {
    std::string base = stage_name(s);
    auto tmpl = read_file(dir / (base + ".txt"));
    if (!tmpl) throw ConfigError("missing prompt template " + (dir / (base + ".txt")).string());
    Entry generic;
    generic.tmpl = strip_trailing_newlines(*tmpl);
    check_slots(generic.tmpl, dir / (base + ".txt"));
    if (auto shots = read_file(dir / (base + ".shots.txt"))) generic.demos = split_demos(*shots);
    for (TaskKind k : {TaskKind::fact_verification, TaskKind::short_qa, TaskKind::long_qa}) {
      std::string key = base + "." + task_name(k);
      auto t = read_file(dir / (key + ".txt"));
      auto d = read_file(dir / (key + ".shots.txt"));
      if (!t && !d) continue;
      Entry e = generic;
      if (t) {
        e.tmpl = strip_trailing_newlines(*t);
        check_slots(e.tmpl, dir / (key + ".txt"));
      }
      if (d) e.demos = split_demos(*d);
      lib.entries_[key] = std::move(e);
    }
    lib.entries_[base] = std::move(generic);
  }
  return lib;
}

const PromptLibrary::Entry& PromptLibrary::find(Stage stage, std::optional<TaskKind> task) const {
  if (task) {
    auto it = entries_.find(std::string(stage_name(stage)) + "." + task_name(*task));
    if (it != entries_.end()) return it->second;
  }
  auto it = entries_.find(stage_name(stage));
  if (it == entries_.end()) throw ConfigError(std::string("no prompt template for stage ") + stage_name(stage));
  return it->second;
}

std::size_t PromptLibrary::demo_count(Stage stage, std::optional<TaskKind> task) const {
  return find(stage, task).demos.size();
}

std::string PromptLibrary::render(Stage stage, std::optional<TaskKind> task,
                                  const std::map<std::string, std::string>& slots, int examples) const {
  const Entry& e = find(stage, task);
  std::string shots;
  std::size_t n = std::min(e.demos.size(), static_cast<std::size_t>(std::max(examples, 0)));
  for (std::size_t i = 0; i < n; ++i) {
    if (i) shots += "\n\n";
    shots += e.demos[i];
  }
  std::string out;
  const std::string& t = e.tmpl;
  for (std::size_t i = 0; i < t.size();) {
    if (t[i] == '{') {
      std::size_t close = t.find('}', i);
      if (close != std::string::npos) {
        std::string name = t.substr(i + 1, close - i - 1);
        bool known = false;
        for (const char* s : kSlots) known = known || name == s;
        if (known) {
          if (name == "few_shots") {
            out += shots;
          } else if (auto it = slots.find(name); it != slots.end()) {
            out += it->second;
          }
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(t[i]);
    ++i;
  }
  return out;
}

}  // namespace tabsense
