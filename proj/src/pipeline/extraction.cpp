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

std::string sample_note(std::size_t i, const std::string& what) { return "sample " + std::to_string(i) + ": " + what; }

// Sends one stage request and records its index in the example log.
const LlmExchange& send(PipelineContext& ctx, Stage stage, const std::string& prompt, StageResult& rec) {
  const StageProfile& sp = ctx.profile.at(stage);
  ctx.gateway.complete(stage, prompt, sp.params, ctx.log);
  rec.exchanges.push_back(ctx.log.size() - 1);
  return ctx.log.back();
}

std::string schema_text(PipelineContext& ctx, const Table& t, StageResult& rec) {
  auto budget = static_cast<std::size_t>(std::max<std::int64_t>(ctx.options.sql_token_budget, 1));
  SqlSchemaEncoding enc = encode_sql_schema(t, budget);
  if (enc.rows_dropped > 0) {
    rec.notes.push_back("schema truncated: " + std::to_string(enc.rows_dropped) + " rows dropped");
  }
  return enc.text;
}

// Shared loop of the two SQL stages. `use` consumes a bound query and
// returns normally on success; it may throw Query* errors.
template <typename Use>
void run_sql_samples(const LlmExchange& ex, StageResult& rec, Use&& use) {
  if (ex.failed) {
    rec.outcome = StageOutcome::gateway_failure;
    rec.notes.push_back(ex.error);
    return;
  }
  bool any_ok = false;
  bool any_exec_failure = false;
  for (std::size_t i = 0; i < ex.completions.size(); ++i) {
    auto sql = extract_sql(ex.completions[i]);
    if (!sql) {
      rec.notes.push_back(sample_note(i, "no SQL statement found"));
      continue;
    }
    rec.queries.push_back(*sql);
    try {
      QueryAst ast = parse_query(*sql);
      use(ast);
      any_ok = true;
    } catch (const QuerySyntaxError& e) {
      rec.notes.push_back(sample_note(i, std::string("syntax: ") + e.what()));
    } catch (const QueryBindError& e) {
      any_exec_failure = true;
      rec.notes.push_back(sample_note(i, std::string("bind: ") + e.what()));
    }
  }
  rec.outcome = any_ok ? StageOutcome::ok : any_exec_failure ? StageOutcome::exec_failure : StageOutcome::parse_failure;
}

std::string match_column(const std::vector<std::string>& valid, std::string_view proposed) {
  std::string want = text::collapse_whitespace(proposed);
  for (const auto& v : valid) {
    if (v == want) return v;
  }
  for (const auto& v : valid) {
    if (text::iequals(v, want)) return v;
  }
  return {};
}

}  // namespace

const StageResult& ExtractionTrace::stage(Stage s) const {
  for (const auto& r : stages) {
    if (r.stage == s) return r;
  }
  throw ConfigError(std::string("extraction trace has no stage ") + stage_name(s));
}

ColumnStageResult col_sql(PipelineContext& ctx, const Table& t, const std::string& q) {
  ColumnStageResult out;
  out.record.stage = Stage::col_sql;
  std::string prompt = ctx.prompts.render(Stage::col_sql, std::nullopt,
                                          {{"table", schema_text(ctx, t, out.record)}, {"question", q}},
                                          ctx.profile.at(Stage::col_sql).examples);
  const LlmExchange& ex = send(ctx, Stage::col_sql, prompt, out.record);
  run_sql_samples(ex, out.record, [&](const QueryAst& ast) {
    out.columns = ColumnSet::merge(t, out.columns, referenced_columns(ast, t));
  });
  return out;
}

ColumnStageResult col_text(PipelineContext& ctx, const Table& t_transposed, const std::string& q, const ColumnSet& c1) {
  ColumnStageResult out;
  out.record.stage = Stage::col_text;
  std::vector<std::string> valid;
  for (const auto& r : t_transposed.rows()) valid.push_back(r.cells.at(0).render());

  std::string prompt = ctx.prompts.render(
      Stage::col_text, std::nullopt,
      {{"table", encode_pipe(t_transposed)}, {"question", q}, {"prior_selection", python_list_literal(c1.names)}},
      ctx.profile.at(Stage::col_text).examples);
  const LlmExchange& ex = send(ctx, Stage::col_text, prompt, out.record);
  if (ex.failed) {
    out.record.outcome = StageOutcome::gateway_failure;
    out.record.notes.push_back(ex.error);
    return out;
  }
  bool any_ok = false;
  std::vector<std::string> picked;
  for (std::size_t i = 0; i < ex.completions.size(); ++i) {
    auto names = parse_column_list(ex.completions[i]);
    if (!names) {
      out.record.notes.push_back(sample_note(i, "no columns: [...] line"));
      continue;
    }
    any_ok = true;
    for (const auto& n : *names) {
      std::string m = match_column(valid, n);
      if (m.empty()) {
        out.record.notes.push_back(sample_note(i, "dropped unknown column '" + n + "'"));
      } else {
        picked.push_back(m);
      }
    }
  }
  // The transposed rows are the original columns in order, so table order
  // is the order of `valid`.
  for (const auto& v : valid) {
    if (std::find(picked.begin(), picked.end(), v) != picked.end()) out.columns.names.push_back(v);
  }
  out.record.outcome = any_ok ? StageOutcome::ok : StageOutcome::parse_failure;
  return out;
}

RowStageResult row_sql(PipelineContext& ctx, const Table& t_c, const std::string& q) {
  RowStageResult out;
  out.record.stage = Stage::row_sql;
  std::string prompt = ctx.prompts.render(Stage::row_sql, std::nullopt,
                                          {{"table", schema_text(ctx, t_c, out.record)}, {"question", q}},
                                          ctx.profile.at(Stage::row_sql).examples);
  const LlmExchange& ex = send(ctx, Stage::row_sql, prompt, out.record);
  run_sql_samples(ex, out.record, [&](const QueryAst& ast) {
    out.rows = RowIdSet::merge(out.rows, result_row_ids(execute(ast, t_c)));
  });
  return out;
}

RowStageResult row_text(PipelineContext& ctx, const Table& t_c, const std::string& q, const RowIdSet& r1) {
  RowStageResult out;
  out.record.stage = Stage::row_text;
  std::string prior = "[";
  for (std::size_t i = 0; i < r1.ids.size(); ++i) prior += (i ? ", " : "") + std::to_string(r1.ids[i]);
  prior += "]";
  std::string prompt = ctx.prompts.render(
      Stage::row_text, std::nullopt, {{"table", encode_pipe(t_c)}, {"question", q}, {"prior_selection", prior}},
      ctx.profile.at(Stage::row_text).examples);
  const LlmExchange& ex = send(ctx, Stage::row_text, prompt, out.record);
  if (ex.failed) {
    out.record.outcome = StageOutcome::gateway_failure;
    out.record.notes.push_back(ex.error);
    return out;
  }
  bool any_ok = false;
  std::vector<std::int64_t> picked;
  for (std::size_t i = 0; i < ex.completions.size(); ++i) {
    auto ids = parse_row_list(ex.completions[i]);
    if (!ids) {
      out.record.notes.push_back(sample_note(i, "no rows: [...] line"));
      continue;
    }
    any_ok = true;
    for (std::int64_t id : *ids) {
      if (t_c.find_row(id)) {
        picked.push_back(id);
      } else {
        out.record.notes.push_back(sample_note(i, "dropped unknown row " + std::to_string(id)));
      }
    }
  }
  out.rows = RowIdSet::from(std::move(picked));
  out.record.outcome = any_ok ? StageOutcome::ok : StageOutcome::parse_failure;
  return out;
}

ExtractionResult extract(PipelineContext& ctx, const Table& t, const std::string& q, ExtractionMode mode) {
  ExtractionTrace trace;
  trace.question = q;
  trace.mode = mode;
  trace.cells_t = cell_count(t);
  bool do_columns = mode == ExtractionMode::full || mode == ExtractionMode::no_row;
  bool do_rows = mode == ExtractionMode::full || mode == ExtractionMode::no_column;

  auto skipped = [](Stage s) {
    StageResult r;
    r.stage = s;
    r.outcome = StageOutcome::skipped;
    return r;
  };

  // Steps 1-4: columns.
  Table t_c = t;
  if (do_columns) {
    auto r1 = col_sql(ctx, t, q);
    auto r2 = col_text(ctx, transpose(t), q, r1.columns);
    trace.c1 = r1.columns;
    trace.c2 = r2.columns;
    trace.stages.push_back(std::move(r1.record));
    trace.stages.push_back(std::move(r2.record));
    trace.c_final = ColumnSet::merge(t, trace.c1, trace.c2);
    if (trace.c_final.empty()) {
      trace.c_final = ColumnSet::all_of(t);
      trace.column_merge = StageOutcome::empty_fallback;
    }
    if (t.column_count() > 0) t_c = filter_columns(t, trace.c_final);
  } else {
    trace.stages.push_back(skipped(Stage::col_sql));
    trace.stages.push_back(skipped(Stage::col_text));
    trace.c_final = ColumnSet::all_of(t);
    trace.column_merge = StageOutcome::skipped;
  }
  trace.cells_tc = cell_count(t_c);

  // Steps 5-8: rows.
  Table t_cr = t_c;
  if (do_rows) {
    auto r1 = row_sql(ctx, t_c, q);
    auto r2 = row_text(ctx, t_c, q, r1.rows);
    trace.r1 = r1.rows;
    trace.r2 = r2.rows;
    trace.stages.push_back(std::move(r1.record));
    trace.stages.push_back(std::move(r2.record));
    trace.r_final = RowIdSet::merge(trace.r1, trace.r2);
    if (trace.r_final.empty()) {
      trace.r_final = RowIdSet::all_of(t_c);
      trace.row_merge = StageOutcome::empty_fallback;
    }
    if (t_c.row_count() > 0) t_cr = filter_rows(t_c, trace.r_final);
  } else {
    trace.stages.push_back(skipped(Stage::row_sql));
    trace.stages.push_back(skipped(Stage::row_text));
    trace.r_final = RowIdSet::all_of(t_c);
    trace.row_merge = StageOutcome::skipped;
  }
  trace.cells_tcr = cell_count(t_cr);
  return ExtractionResult{std::move(t_c), std::move(t_cr), std::move(trace)};
}

}  // namespace tabsense
