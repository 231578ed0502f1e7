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

#include "sample_tables.hpp"
#include "scripted_backend.hpp"
#include "shrinkage_corpus.hpp"
#include "tabsense/pipeline.hpp"

namespace tabsense {
namespace {

using testing::FunctionBackend;

struct Harness {
  std::shared_ptr<Backend> backend;
  Gateway gateway;
  PromptLibrary prompts = PromptLibrary::load(PromptLibrary::default_dir());
  Profile profile = builtin_profile("gpt35-wikitq");
  std::vector<LlmExchange> log;

  explicit Harness(std::shared_ptr<Backend> b) : backend(b), gateway(b) {}
  explicit Harness(FunctionBackend::Fn fn) : Harness(std::make_shared<FunctionBackend>(std::move(fn))) {}

  PipelineContext ctx() { return PipelineContext{gateway, prompts, profile, {}, log}; }
};

Harness golden() {
  return Harness(std::make_shared<testing::ScriptedBackend>(
      testing::script_from_json(nlohmann::json::parse(testing::kAmericansScriptJson))));
}

TEST(Parse, ExtractSqlForms) {
  EXPECT_EQ(extract_sql("```sql\nSELECT a FROM w\n```"), "SELECT a FROM w");
  EXPECT_EQ(extract_sql("Here it is:\nSQL: select a from w;"), "select a from w;");
  EXPECT_EQ(extract_sql("SELECT a\nFROM w\nWHERE b = 1\nThis returns a."), "SELECT a\nFROM w\nWHERE b = 1");
  EXPECT_FALSE(extract_sql("I cannot answer.").has_value());
  EXPECT_FALSE(extract_sql("selection is hard").has_value());
}

TEST(Parse, ColumnAndRowLists) {
  EXPECT_EQ(parse_column_list("x\ncolumns: ['year', \"national cup\"]"),
            (std::vector<std::string>{"year", "national cup"}));
  EXPECT_EQ(parse_column_list("columns: ['o\\'neil', b]"), (std::vector<std::string>{"o'neil", "b"}));
  EXPECT_EQ(parse_column_list("columns: []"), std::vector<std::string>{});
  EXPECT_FALSE(parse_column_list("no list").has_value());
  EXPECT_EQ(parse_row_list("rows: [1, 18]"), (std::vector<std::int64_t>{1, 18}));
  EXPECT_EQ(parse_row_list("rows: [row 2, row_7, x]"), (std::vector<std::int64_t>{2, 7}));
  EXPECT_EQ(parse_row_list("rows: []"), std::vector<std::int64_t>{});
  // The last matching line wins.
  EXPECT_EQ(parse_row_list("rows: [1]\nrows: [2]"), (std::vector<std::int64_t>{2}));
}

TEST(Parse, AnswersAndLabels) {
  EXPECT_EQ(parse_answer("because\nAnswer: 17"), "17");
  EXPECT_FALSE(parse_answer("Answer:").has_value());
  EXPECT_FALSE(parse_answer("no marker").has_value());
  EXPECT_EQ(parse_answer("Answer: The team won.\nIt was close."), "The team won.\nIt was close.");
  EXPECT_EQ(parse_label("yes"), Label::entailed);
  EXPECT_EQ(parse_label("True."), Label::entailed);
  EXPECT_EQ(parse_label("refuted"), Label::refuted);
  EXPECT_FALSE(parse_label("maybe").has_value());
  EXPECT_EQ(parse_yes_no("A: YES"), true);
  EXPECT_EQ(parse_yes_no("no."), false);
  EXPECT_FALSE(parse_yes_no("unsure").has_value());
}

TEST(Prompts, RenderFillsSlotsAndFewShots) {
  auto lib = PromptLibrary::load(PromptLibrary::default_dir());
  EXPECT_GE(lib.demo_count(Stage::col_sql, std::nullopt), 4u);
  std::string p0 = lib.render(Stage::col_sql, std::nullopt, {{"table", "TBL"}, {"question", "QQ"}}, 0);
  EXPECT_NE(p0.find("TBL\nQ: QQ\nSQL:"), std::string::npos);
  EXPECT_EQ(p0.find("CREATE TABLE"), std::string::npos);
  std::string p2 = lib.render(Stage::col_sql, std::nullopt, {{"table", "TBL"}, {"question", "QQ"}}, 2);
  EXPECT_NE(p2.find("CREATE TABLE 1998 tour de france"), std::string::npos);
  EXPECT_NE(p2.find("CREATE TABLE tallest buildings in oslo"), std::string::npos);
  EXPECT_EQ(p2.find("springfield"), std::string::npos);
  EXPECT_EQ(testing::question_of(p2), "QQ");
  // Task-specific template for fact verification.
  std::string fv = lib.render(Stage::reason_text, TaskKind::fact_verification, {{"question", "S"}}, 1);
  EXPECT_NE(fv.find("Statement: S"), std::string::npos);
}

TEST(Profiles, BuiltinSettings) {
  Profile g = builtin_profile("gpt35-wikitq");
  EXPECT_DOUBLE_EQ(g.at(Stage::col_sql).params.temperature, 0.3);
  EXPECT_EQ(g.at(Stage::col_text).examples, 2);
  EXPECT_EQ(g.at(Stage::reason_text).params.max_output_tokens, 256);
  Profile p = builtin_profile("palm2-tabfact");
  EXPECT_DOUBLE_EQ(p.at(Stage::row_text).params.temperature, 0.7);
  EXPECT_EQ(p.at(Stage::reason_text).examples, 5);
  for (const auto& name : builtin_profile_names()) {
    Profile x = builtin_profile(name);
    int extraction = 0;
    for (Stage s : {Stage::col_sql, Stage::col_text, Stage::row_sql, Stage::row_text}) {
      extraction += x.at(s).params.n_samples;
    }
    EXPECT_EQ(extraction, 8) << name;
    EXPECT_EQ(x.at(Stage::reason_sql).params.n_samples + x.at(Stage::reason_text).params.n_samples, 2) << name;
    EXPECT_DOUBLE_EQ(x.at(Stage::math_classify).params.temperature, 0.0);
  }
  EXPECT_EQ(profile_for_task("gpt35", TaskKind::long_qa), "gpt35-wikitq");
  EXPECT_EQ(profile_for_task("palm2", TaskKind::fact_verification), "palm2-tabfact");
}

TEST(Extraction, GoldenWalkThrough) {
  Harness h = golden();
  auto ctx = h.ctx();
  Table t = load_table(testing::americans_source());
  auto res = extract(ctx, t, testing::kAmericansQuestion, ExtractionMode::full);
  EXPECT_EQ(res.trace.c1, (ColumnSet{{"year"}}));
  EXPECT_EQ(res.trace.c2, (ColumnSet{{"year", "national cup"}}));
  EXPECT_EQ(res.trace.c_final, (ColumnSet{{"year", "national cup"}}));
  EXPECT_EQ(res.trace.r1, (RowIdSet{{18}}));
  EXPECT_EQ(res.trace.r2, (RowIdSet{{1, 18}}));
  EXPECT_EQ(res.trace.r_final, (RowIdSet{{1, 18}}));
  EXPECT_EQ(res.trace.cells_t, 108u);
  EXPECT_EQ(res.trace.cells_tc, 36u);
  EXPECT_EQ(res.trace.cells_tcr, 4u);
  EXPECT_EQ(cell_count(res.t_cr), 4u);
  EXPECT_EQ(res.t_cr.row_ids(), (std::vector<std::int64_t>{1, 18}));
  for (const auto& st : res.trace.stages) EXPECT_EQ(st.outcome, StageOutcome::ok) << stage_name(st.stage);
  EXPECT_EQ(generation_budget(h.log), 8);
}

TEST(Extraction, TextOnlySelectionsWhenSqlFails) {
  Harness h([](Stage s, const std::string&, const SamplingParams& p) {
    std::string c;
    switch (s) {
      case Stage::col_sql: c = "SELECT nonsense FROM w"; break;
      case Stage::row_sql: c = "I would pick the last row."; break;
      case Stage::col_text: c = "columns: ['Year', 'murdered']"; break;
      case Stage::row_text: c = "rows: [18, 99]"; break;
      default: c = "";
    }
    return std::vector<std::string>(static_cast<std::size_t>(p.n_samples), c);
  });
  auto ctx = h.ctx();
  Table t = load_table(testing::americans_source());
  auto res = extract(ctx, t, "q", ExtractionMode::full);
  EXPECT_EQ(res.trace.stage(Stage::col_sql).outcome, StageOutcome::exec_failure);
  EXPECT_EQ(res.trace.stage(Stage::row_sql).outcome, StageOutcome::parse_failure);
  EXPECT_EQ(res.trace.stage(Stage::col_text).outcome, StageOutcome::ok);
  EXPECT_EQ(res.trace.c_final, (ColumnSet{{"year"}}));
  EXPECT_EQ(res.trace.r_final, (RowIdSet{{18}}));
  const auto& notes = res.trace.stage(Stage::col_text).notes;
  EXPECT_TRUE(std::any_of(notes.begin(), notes.end(),
                          [](const std::string& n) { return n.find("murdered") != std::string::npos; }));
  const auto& rnotes = res.trace.stage(Stage::row_text).notes;
  EXPECT_TRUE(std::any_of(rnotes.begin(), rnotes.end(),
                          [](const std::string& n) { return n.find("99") != std::string::npos; }));
}

TEST(Extraction, EmptySelectionsFallBackToEverything) {
  Harness h([](Stage s, const std::string&, const SamplingParams& p) {
    std::string c = s == Stage::col_text ? "columns: []" : s == Stage::row_text ? "rows: []" : "nothing";
    return std::vector<std::string>(static_cast<std::size_t>(p.n_samples), c);
  });
  auto ctx = h.ctx();
  Table t = testing::exeter_sample();
  auto res = extract(ctx, t, "q", ExtractionMode::full);
  EXPECT_EQ(res.trace.column_merge, StageOutcome::empty_fallback);
  EXPECT_EQ(res.trace.row_merge, StageOutcome::empty_fallback);
  EXPECT_EQ(res.t_cr.columns(), t.columns());
  EXPECT_EQ(res.t_cr.row_ids(), t.row_ids());
}

TEST(Extraction, ModeSwitches) {
  Table t = load_table(testing::americans_source());
  {
    Harness h = golden();
    auto ctx = h.ctx();
    auto res = extract(ctx, t, testing::kAmericansQuestion, ExtractionMode::none);
    EXPECT_TRUE(h.log.empty());
    EXPECT_EQ(cell_count(res.t_cr), cell_count(t));
    for (const auto& st : res.trace.stages) EXPECT_EQ(st.outcome, StageOutcome::skipped);
  }
  {
    Harness h = golden();
    auto ctx = h.ctx();
    auto res = extract(ctx, t, testing::kAmericansQuestion, ExtractionMode::no_column);
    EXPECT_EQ(res.t_c.columns(), t.columns());
    EXPECT_EQ(res.trace.r_final, (RowIdSet{{1, 18}}));
    EXPECT_EQ(generation_budget(h.log), 4);
  }
  {
    Harness h = golden();
    auto ctx = h.ctx();
    auto res = extract(ctx, t, testing::kAmericansQuestion, ExtractionMode::no_row);
    EXPECT_EQ(res.trace.r_final, RowIdSet::all_of(res.t_c));
    EXPECT_EQ(res.t_cr.columns(), (std::vector<std::string>{"year", "national cup"}));
  }
}

TEST(Reasoning, KeywordFallback) {
  const auto& k = default_math_keywords();
  EXPECT_TRUE(keyword_math(testing::kAmericansQuestion, k));
  EXPECT_FALSE(keyword_math("What is the name in row 1?", k));
  EXPECT_FALSE(keyword_math("", k));
  EXPECT_FALSE(keyword_math("who was almost champion?", k));  // "most" inside a word
  EXPECT_TRUE(keyword_math("Which team scored the MOST goals?", k));
}

TEST(Reasoning, ClassifierFallsBackOnUnparseableReply) {
  Harness h([](Stage, const std::string&, const SamplingParams&) { return std::vector<std::string>{"perhaps"}; });
  auto ctx = h.ctx();
  ReasoningTrace tr;
  EXPECT_FALSE(classify_math(ctx, "What is the name in row 1?", tr));
  EXPECT_TRUE(tr.classify_fallback);
  EXPECT_EQ(tr.classify.outcome, StageOutcome::parse_failure);
  ReasoningTrace empty;
  EXPECT_FALSE(classify_math(ctx, "", empty));
}

TEST(Reasoning, GoldenAdaptiveBranch) {
  Harness h = golden();
  auto ctx = h.ctx();
  Table t = load_table(testing::americans_source());
  auto ex = extract(ctx, t, testing::kAmericansQuestion, ExtractionMode::full);
  auto r = reason(ctx, ex.t_cr, testing::kAmericansQuestion, TaskKind::short_qa, ReasoningMode::adaptive);
  EXPECT_TRUE(r.trace.is_math);
  ASSERT_TRUE(r.evidence.has_value());
  ASSERT_TRUE(r.evidence->result.has_value());
  ASSERT_EQ(r.evidence->result->rows.size(), 1u);
  EXPECT_EQ(r.evidence->result->rows[0].values[0].render(), "17");
  EXPECT_EQ(r.answer.text, "17");
  EXPECT_FALSE(r.answer.abstained);
  EXPECT_EQ(generation_budget(h.log), 10);
  EXPECT_EQ(classify_samples(h.log), 1);
  EXPECT_NE(h.log.back().prompt.find("SQL evidence:\n"), std::string::npos);
}

TEST(Reasoning, EvidenceCountOnSingleRow) {
  Harness h([](Stage, const std::string&, const SamplingParams&) {
    return std::vector<std::string>{"SELECT COUNT(*) FROM w"};
  });
  auto ctx = h.ctx();
  Table one = filter_rows(testing::exeter_sample(), RowIdSet{{4}});
  Evidence ev = sql_evidence(ctx, one, "how many players?");
  ASSERT_TRUE(ev.result.has_value());
  EXPECT_EQ(ev.result->rows.at(0).values.at(0).render(), "1");
  EXPECT_EQ(ev.record.outcome, StageOutcome::ok);
}

TEST(Reasoning, UnparseableEvidenceDegradesToText) {
  Harness h([](Stage s, const std::string&, const SamplingParams& p) {
    if (s == Stage::math_classify) return std::vector<std::string>{"YES"};
    if (s == Stage::reason_sql) return std::vector<std::string>(static_cast<std::size_t>(p.n_samples), "SELEC oops");
    return std::vector<std::string>(static_cast<std::size_t>(p.n_samples), "Answer: 3");
  });
  auto ctx = h.ctx();
  auto r = reason(ctx, testing::exeter_sample(), "how many?", TaskKind::short_qa, ReasoningMode::adaptive);
  ASSERT_TRUE(r.evidence.has_value());
  EXPECT_EQ(r.evidence->record.outcome, StageOutcome::parse_failure);
  EXPECT_EQ(r.answer.text, "3");
  EXPECT_EQ(h.log.back().prompt.find("SQL evidence:"), h.log.back().prompt.rfind("SQL evidence:"));
}

TEST(Reasoning, FactVerificationLabels) {
  for (auto [reply, label] : {std::pair{"Answer: yes", Label::entailed}, std::pair{"Answer: no", Label::refuted}}) {
    Harness h([reply = std::string(reply)](Stage, const std::string&, const SamplingParams&) {
      return std::vector<std::string>{reply};
    });
    auto ctx = h.ctx();
    auto r = reason(ctx, testing::exeter_sample(), "s", TaskKind::fact_verification, ReasoningMode::text_only);
    ASSERT_TRUE(r.answer.label.has_value());
    EXPECT_EQ(*r.answer.label, label);
    EXPECT_FALSE(r.evidence.has_value());
  }
}

TEST(Reasoning, EmptyAnswerAbstains) {
  Harness h([](Stage, const std::string&, const SamplingParams&) { return std::vector<std::string>{"Answer:"}; });
  auto ctx = h.ctx();
  auto r = reason(ctx, testing::exeter_sample(), "q", TaskKind::short_qa, ReasoningMode::text_only);
  EXPECT_TRUE(r.answer.abstained);
  EXPECT_EQ(r.trace.answer.outcome, StageOutcome::parse_failure);
}

TEST(Reasoning, LongAnswerKeptVerbatim) {
  const std::string sentence = "Jamie Cureton scored 20 goals, the most in the squad.";
  Harness h([&](Stage, const std::string&, const SamplingParams&) {
    return std::vector<std::string>{"Explanation: row 8.\nAnswer: " + sentence};
  });
  auto ctx = h.ctx();
  auto r = reason(ctx, testing::exeter_sample(), "who scored most?", TaskKind::long_qa, ReasoningMode::text_only);
  EXPECT_EQ(r.answer.text, sentence);
}

TEST(Reasoning, FirstParseableSampleWins) {
  Harness h([](Stage, const std::string&, const SamplingParams&) {
    return std::vector<std::string>{"no marker", "Answer: 12", "Answer: 13"};
  });
  h.profile.stages[Stage::reason_text].params.n_samples = 3;
  auto ctx = h.ctx();
  StageResult rec;
  Answer a = text_answer(ctx, testing::exeter_sample(), "q", nullptr, TaskKind::short_qa, rec);
  EXPECT_EQ(a.text, "12");
  EXPECT_EQ(a.chosen_sample, 1);
  EXPECT_TRUE(a.samples_disagreed);
}

TEST(Reasoning, SqlOnlyAnswersFromEvidence) {
  Harness h([](Stage, const std::string&, const SamplingParams&) {
    return std::vector<std::string>{"SELECT name FROM w WHERE total > 100"};
  });
  auto ctx = h.ctx();
  auto r = reason(ctx, testing::exeter_sample(), "who scored over 100?", TaskKind::short_qa, ReasoningMode::sql_only);
  ASSERT_TRUE(r.evidence.has_value());
  EXPECT_TRUE(r.answer.abstained);

  Harness h2([](Stage, const std::string&, const SamplingParams&) {
    return std::vector<std::string>{"SELECT COUNT(*) > 2 FROM w"};
  });
  auto ctx2 = h2.ctx();
  auto r2 = reason(ctx2, testing::exeter_sample(), "s", TaskKind::fact_verification, ReasoningMode::sql_only);
  ASSERT_TRUE(r2.answer.label.has_value());
  EXPECT_EQ(*r2.answer.label, Label::entailed);
}

TEST(Reasoning, AdaptiveEqualsTextOnlyWhenNotMath) {
  auto fn = [](Stage s, const std::string&, const SamplingParams&) {
    return std::vector<std::string>{s == Stage::math_classify ? "NO" : "Answer: danny coles"};
  };
  Harness a(fn), b(fn);
  auto ca = a.ctx();
  auto cb = b.ctx();
  auto ra = reason(ca, testing::exeter_sample(), "who is in row 1?", TaskKind::short_qa, ReasoningMode::adaptive);
  auto rb = reason(cb, testing::exeter_sample(), "who is in row 1?", TaskKind::short_qa, ReasoningMode::text_only);
  EXPECT_FALSE(ra.evidence.has_value());
  EXPECT_EQ(ra.answer.text, rb.answer.text);
  EXPECT_EQ(a.log.back().prompt, b.log.back().prompt);
  EXPECT_EQ(a.log.back().stage, Stage::reason_text);
}

TEST(Reasoning, GatewayFailureYieldsAbstention) {
  Harness h([](Stage, const std::string&, const SamplingParams&) -> std::vector<std::string> {
    throw GatewayError("down");
  });
  auto ctx = h.ctx();
  Table t = testing::exeter_sample();
  auto ex = extract(ctx, t, "how many goals in total?", ExtractionMode::full);
  EXPECT_EQ(ex.trace.stage(Stage::col_sql).outcome, StageOutcome::gateway_failure);
  EXPECT_EQ(cell_count(ex.t_cr), cell_count(t));
  auto r = reason(ctx, ex.t_cr, "how many goals in total?", TaskKind::short_qa, ReasoningMode::adaptive);
  EXPECT_TRUE(r.trace.classify_fallback);
  EXPECT_TRUE(r.answer.abstained);
  EXPECT_EQ(generation_budget(h.log), 0);
}

TEST(ExtractionProperty, EveryStepShrinksTheTable) {
  auto stats = testing::run_shrinkage_corpus(600, 31337);
  EXPECT_EQ(stats.cases, 600);
  EXPECT_EQ(stats.violations, 0) << (stats.failures.empty() ? "" : stats.failures.front());
  EXPECT_GT(stats.fallbacks, 0);  // the corpus reaches the fallback path
}

}  // namespace
}  // namespace tabsense
