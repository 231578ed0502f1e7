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

#include "tabsense/error.hpp"
#include "tabsense/eval.hpp"

namespace tabsense {

using nlohmann::json;

namespace {

json params_json(const SamplingParams& p) {
  return {{"temperature", p.temperature},
          {"top_p", p.top_p},
          {"max_output_tokens", p.max_output_tokens},
          {"n_samples", p.n_samples}};
}

json stage_json(const StageResult& s) {
  return {{"stage", stage_name(s.stage)},
          {"outcome", outcome_name(s.outcome)},
          {"exchanges", s.exchanges},
          {"queries", s.queries},
          {"notes", s.notes}};
}

json rouge_json(const std::optional<RougeScore>& r) {
  if (!r) return nullptr;
  return {{"precision", r->precision}, {"recall", r->recall}, {"f1", r->f1}};
}

std::optional<RougeScore> rouge_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return RougeScore{j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

json evidence_json(const Evidence& ev) {
  json j = {{"query", ev.query_text}, {"rendered", ev.rendered}, {"stage", stage_json(ev.record)}};
  if (ev.result) {
    json rows = json::array();
    json ids = json::array();
    for (const auto& r : ev.result->rows) {
      json cells = json::array();
      for (const auto& v : r.values) cells.push_back(v.render());
      rows.push_back(std::move(cells));
      ids.push_back(r.source_row_ids);
    }
    j["result"] = {{"columns", ev.result->columns}, {"rows", rows}, {"source_row_ids", ids}};
  } else {
    j["result"] = nullptr;
  }
  return j;
}

}  // namespace

json record_to_json(const EvalRecord& r) {
  json answer = {{"text", r.answer.text},
                 {"label", r.answer.label ? json(label_name(*r.answer.label)) : json(nullptr)},
                 {"abstained", r.answer.abstained},
                 {"raw_completions", r.answer.raw_completions},
                 {"chosen_sample", r.answer.chosen_sample},
                 {"samples_disagreed", r.answer.samples_disagreed}};

  const ExtractionTrace& x = r.extraction;
  json stages = json::array();
  for (const auto& s : x.stages) stages.push_back(stage_json(s));
  json extraction = {{"mode", extraction_mode_name(x.mode)},
                     {"c1", x.c1.names},
                     {"c2", x.c2.names},
                     {"c_final", x.c_final.names},
                     {"r1", x.r1.ids},
                     {"r2", x.r2.ids},
                     {"r_final", x.r_final.ids},
                     {"column_merge", outcome_name(x.column_merge)},
                     {"row_merge", outcome_name(x.row_merge)},
                     {"cells", {{"t", x.cells_t}, {"tc", x.cells_tc}, {"tcr", x.cells_tcr}}},
                     {"stages", stages}};

  const ReasoningTrace& rt = r.reasoning;
  json reasoning = {{"mode", reasoning_mode_name(rt.mode)},
                    {"classify_ran", rt.classify_ran},
                    {"is_math", rt.is_math},
                    {"classify_fallback", rt.classify_fallback},
                    {"classify", stage_json(rt.classify)},
                    {"answer", stage_json(rt.answer)}};

  json exchanges = json::array();
  for (const auto& e : r.exchanges) {
    exchanges.push_back({{"stage", stage_name(e.stage)},
                         {"digest", short_digest(fixture_digest(e.stage, e.prompt))},
                         {"prompt", e.prompt},
                         {"params", params_json(e.params)},
                         {"completions", e.completions},
                         {"failed", e.failed},
                         {"error", e.error}});
  }

  json metrics = {{"correct", r.correct ? json(*r.correct) : json(nullptr)},
                  {"rouge1", rouge_json(r.rouge1)},
                  {"rouge2", rouge_json(r.rouge2)},
                  {"rougeL", rouge_json(r.rougeL)},
                  {"token_estimate", r.token_estimate},
                  {"bucket", bucket_name(r.bucket)},
                  {"generation_budget", r.generation_budget},
                  {"classify_samples", r.classify_samples}};

  return {{"index", r.index},
          {"id", r.id},
          {"task", task_name(r.task)},
          {"question", r.question},
          {"gold", r.gold},
          {"profile", r.profile},
          {"extraction_mode", extraction_mode_name(r.extraction_mode)},
          {"reasoning_mode", reasoning_mode_name(r.reasoning_mode)},
          {"answer", answer},
          {"evidence", r.evidence ? evidence_json(*r.evidence) : json(nullptr)},
          {"extraction", extraction},
          {"reasoning", reasoning},
          {"exchanges", exchanges},
          {"metrics", metrics},
          {"error", r.error ? json(*r.error) : json(nullptr)}};
}

RecordSummary summary_from_json(const json& j) {
  try {
    RecordSummary s;
    s.id = j.at("id").get<std::string>();
    auto task = parse_task(j.at("task").get<std::string>());
    if (!task) throw DatasetError("trace has unknown task");
    s.task = *task;
    s.abstained = j.at("answer").at("abstained").get<bool>();
    s.errored = !j.at("error").is_null();
    const json& m = j.at("metrics");
    if (!m.at("correct").is_null()) s.correct = m.at("correct").get<bool>();
    s.rouge1 = rouge_from(m.at("rouge1"));
    s.rouge2 = rouge_from(m.at("rouge2"));
    s.rougeL = rouge_from(m.at("rougeL"));
    s.token_estimate = m.at("token_estimate").get<std::int64_t>();
    std::string b = m.at("bucket").get<std::string>();
    s.bucket = b == "large" ? Bucket::large : b == "medium" ? Bucket::medium : Bucket::small;
    s.generation_budget = m.at("generation_budget").get<int>();
    s.classify_samples = m.at("classify_samples").get<int>();

    const json& x = j.at("extraction");
    s.cells_t = x.at("cells").at("t").get<std::size_t>();
    s.cells_tc = x.at("cells").at("tc").get<std::size_t>();
    s.cells_tcr = x.at("cells").at("tcr").get<std::size_t>();
    for (const auto& st : x.at("stages")) {
      s.stage_outcomes[st.at("stage").get<std::string>()] = st.at("outcome").get<std::string>();
    }
    s.stage_outcomes["column_merge"] = x.at("column_merge").get<std::string>();
    s.stage_outcomes["row_merge"] = x.at("row_merge").get<std::string>();
    const json& rt = j.at("reasoning");
    for (const char* key : {"classify", "answer"}) {
      const json& st = rt.at(key);
      s.stage_outcomes[st.at("stage").get<std::string>()] = st.at("outcome").get<std::string>();
    }
    const json& ev = j.at("evidence");
    if (!ev.is_null()) {
      s.evidence_used = !ev.at("result").is_null();
      s.stage_outcomes[ev.at("stage").at("stage").get<std::string>()] = ev.at("stage").at("outcome").get<std::string>();
    }
    s.extraction_mode = j.at("extraction_mode").get<std::string>();
    s.reasoning_mode = j.at("reasoning_mode").get<std::string>();
    return s;
  } catch (const json::exception& e) {
    throw DatasetError(std::string("malformed trace: ") + e.what());
  }
}

}  // namespace tabsense
