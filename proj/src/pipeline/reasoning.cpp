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

#include "tabsense/error.hpp"
#include "tabsense/pipeline.hpp"
#include "text_util.hpp"

namespace tabsense {
namespace {

const LlmExchange& send(PipelineContext& ctx, Stage stage, const std::string& prompt, StageResult& rec) {
  ctx.gateway.complete(stage, prompt, ctx.profile.at(stage).params, ctx.log);
  rec.exchanges.push_back(ctx.log.size() - 1);
  return ctx.log.back();
}

bool is_word_char(char c) { return text::is_alpha(c) || text::is_digit(c) || c == '_'; }

Answer abstain(std::vector<std::string> raw) {
  Answer a;
  a.abstained = true;
  a.raw_completions = std::move(raw);
  return a;
}

}  // namespace

const std::vector<std::string>& default_math_keywords() {
  static const std::vector<std::string> k = {"how many", "total",     "sum",     "average",   "difference",
                                             "most",     "least",     "longest", "shortest",  "count",
                                             "more than", "fewer",    "combined", "how long", "how much"};
  return k;
}

bool keyword_math(std::string_view q, const std::vector<std::string>& keywords) {
  std::string hay = text::ascii_lower(q);
  for (const auto& raw : keywords) {
    std::string k = text::ascii_lower(raw);
    if (k.empty()) continue;
    for (std::size_t pos = hay.find(k); pos != std::string::npos; pos = hay.find(k, pos + 1)) {
      bool left = pos == 0 || !is_word_char(hay[pos - 1]);
      bool right = pos + k.size() >= hay.size() || !is_word_char(hay[pos + k.size()]);
      if (left && right) return true;
    }
  }
  return false;
}

bool classify_math(PipelineContext& ctx, const std::string& q, ReasoningTrace& trace) {
  trace.classify_ran = true;
  trace.classify.stage = Stage::math_classify;
  const auto& keywords = ctx.options.math_keywords.empty() ? default_math_keywords() : ctx.options.math_keywords;
  if (text::trim(q).empty()) {
    trace.classify.outcome = StageOutcome::skipped;
    trace.classify.notes.push_back("empty question");
    trace.is_math = false;
    return false;
  }
  std::string prompt = ctx.prompts.render(Stage::math_classify, std::nullopt, {{"question", q}},
                                          ctx.profile.at(Stage::math_classify).examples);
  const LlmExchange& ex = send(ctx, Stage::math_classify, prompt, trace.classify);
  std::optional<bool> verdict;
  if (ex.failed) {
    trace.classify.outcome = StageOutcome::gateway_failure;
    trace.classify.notes.push_back(ex.error);
  } else {
    for (const auto& c : ex.completions) {
      if ((verdict = parse_yes_no(c))) break;
    }
    trace.classify.outcome = verdict ? StageOutcome::ok : StageOutcome::parse_failure;
  }
  if (!verdict) {
    trace.classify_fallback = true;
    verdict = keyword_math(q, keywords);
    trace.classify.notes.push_back(std::string("keyword fallback: ") + (*verdict ? "math" : "not math"));
  }
  trace.is_math = *verdict;
  return *verdict;
}

Evidence sql_evidence(PipelineContext& ctx, const Table& t_cr, const std::string& q) {
  Evidence ev;
  ev.record.stage = Stage::reason_sql;
  auto budget = static_cast<std::size_t>(std::max<std::int64_t>(ctx.options.sql_token_budget, 1));
  SqlSchemaEncoding enc = encode_sql_schema(t_cr, budget);
  if (enc.rows_dropped > 0) {
    ev.record.notes.push_back("schema truncated: " + std::to_string(enc.rows_dropped) + " rows dropped");
  }
  std::string prompt = ctx.prompts.render(Stage::reason_sql, std::nullopt, {{"table", enc.text}, {"question", q}},
                                          ctx.profile.at(Stage::reason_sql).examples);
  const LlmExchange& ex = send(ctx, Stage::reason_sql, prompt, ev.record);
  if (ex.failed) {
    ev.record.outcome = StageOutcome::gateway_failure;
    ev.record.notes.push_back(ex.error);
    return ev;
  }
  bool any_exec_failure = false;
  for (std::size_t i = 0; i < ex.completions.size(); ++i) {
    auto sql = extract_sql(ex.completions[i]);
    if (!sql) {
      ev.record.notes.push_back("sample " + std::to_string(i) + ": no SQL statement found");
      continue;
    }
    ev.record.queries.push_back(*sql);
    try {
      ResultSet rs = execute(parse_query(*sql), t_cr);
      ev.query_text = *sql;
      ev.rendered = encode_pipe(result_as_table(rs));
      ev.result = std::move(rs);
      ev.record.outcome = StageOutcome::ok;
      return ev;
    } catch (const QuerySyntaxError& e) {
      ev.record.notes.push_back("sample " + std::to_string(i) + ": syntax: " + e.what());
    } catch (const QueryBindError& e) {
      any_exec_failure = true;
      ev.record.notes.push_back("sample " + std::to_string(i) + ": bind: " + e.what());
    }
  }
  ev.record.outcome = any_exec_failure ? StageOutcome::exec_failure : StageOutcome::parse_failure;
  return ev;
}

Answer text_answer(PipelineContext& ctx, const Table& t_cr, const std::string& q, const Evidence* ev, TaskKind task,
                   StageResult& record) {
  record.stage = Stage::reason_text;
  std::string evidence_block;
  if (ev && ev->result) evidence_block = "SQL evidence:\n" + ev->rendered + "\n";
  std::string prompt = ctx.prompts.render(Stage::reason_text, task,
                                          {{"table", encode_pipe(t_cr)}, {"question", q}, {"evidence", evidence_block}},
                                          ctx.profile.at(Stage::reason_text).examples);
  const LlmExchange& ex = send(ctx, Stage::reason_text, prompt, record);
  if (ex.failed) {
    record.outcome = StageOutcome::gateway_failure;
    record.notes.push_back(ex.error);
    return abstain({});
  }
  Answer ans;
  ans.raw_completions = ex.completions;
  for (std::size_t i = 0; i < ex.completions.size(); ++i) {
    auto parsed = parse_answer(ex.completions[i]);
    std::optional<Label> label;
    if (parsed && task == TaskKind::fact_verification) {
      label = parse_label(*parsed);
      if (!label) parsed.reset();
    }
    if (!parsed) {
      record.notes.push_back("sample " + std::to_string(i) + ": no parseable answer");
      continue;
    }
    std::string text = label ? label_name(*label) : *parsed;
    if (ans.chosen_sample < 0) {
      ans.chosen_sample = static_cast<int>(i);
      ans.text = text;
      ans.label = label;
    } else if (text::collapse_whitespace(text::ascii_lower(text)) !=
               text::collapse_whitespace(text::ascii_lower(ans.text))) {
      ans.samples_disagreed = true;
      record.notes.push_back("sample " + std::to_string(i) + " disagrees; first parseable sample kept");
    }
  }
  if (ans.chosen_sample < 0) {
    record.outcome = StageOutcome::parse_failure;
    return abstain(ex.completions);
  }
  record.outcome = StageOutcome::ok;
  return ans;
}

Answer evidence_answer(const Evidence& ev, TaskKind task) {
  if (!ev.result || ev.result->rows.empty() || ev.result->rows[0].values.empty()) return abstain({});
  std::string cell = ev.result->rows[0].values[0].render();
  if (cell.empty()) return abstain({});
  Answer a;
  a.chosen_sample = 0;
  if (task == TaskKind::fact_verification) {
    std::string v = text::ascii_lower(text::trim(cell));
    if (v == "1" || v == "true" || v == "yes") {
      a.label = Label::entailed;
    } else if (v == "0" || v == "false" || v == "no") {
      a.label = Label::refuted;
    } else {
      return abstain({});
    }
    a.text = label_name(*a.label);
    return a;
  }
  a.text = cell;
  return a;
}

ReasoningResult reason(PipelineContext& ctx, const Table& t_cr, const std::string& q, TaskKind task,
                       ReasoningMode mode) {
  ReasoningResult out;
  out.trace.mode = mode;
  out.trace.classify.stage = Stage::math_classify;
  out.trace.answer.stage = Stage::reason_text;
  switch (mode) {
    case ReasoningMode::adaptive:
      if (classify_math(ctx, q, out.trace)) out.evidence = sql_evidence(ctx, t_cr, q);
      out.answer = text_answer(ctx, t_cr, q, out.evidence ? &*out.evidence : nullptr, task, out.trace.answer);
      break;
    case ReasoningMode::text_only:
      out.answer = text_answer(ctx, t_cr, q, nullptr, task, out.trace.answer);
      break;
    case ReasoningMode::sql_only:
      out.evidence = sql_evidence(ctx, t_cr, q);
      out.answer = evidence_answer(*out.evidence, task);
      out.trace.answer.outcome = StageOutcome::skipped;
      if (out.answer.abstained) out.trace.answer.notes.push_back("no evidence value to answer from");
      break;
  }
  return out;
}

}  // namespace tabsense
