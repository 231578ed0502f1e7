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

#include "tabsense/tabsense.h"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <string>

#include "tabsense/error.hpp"
#include "tabsense/eval.hpp"
#include "tabsense/query.hpp"
#include "tabsense/table.hpp"

using nlohmann::json;
using namespace tabsense;

struct ts_table {
  Table table;
};

struct ts_session {
  RunConfig config;
  PromptLibrary prompts;
  std::unique_ptr<Gateway> gateway;
};

namespace {

thread_local std::string g_last_error;
std::atomic<bool> g_cancel{false};
static_assert(std::atomic<bool>::is_always_lock_free);

ts_status status_of(ErrorCode c) { return static_cast<ts_status>(static_cast<int>(c)); }

ts_status fail(ts_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

// Runs `fn`, translating exceptions into a status and the thread's last error.
template <class Fn>
ts_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return TS_OK;
  } catch (const Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(TS_ERR_INVALID_ARGUMENT, std::string("invalid JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(TS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TS_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw ConfigError(std::string(what) + " must not be NULL");
}

TableSource table_source_from(const json& j) {
  if (!j.is_object()) throw StructuralError("table JSON must be an object with header and rows");
  if (!j.contains("header") || !j["header"].is_array()) throw StructuralError("table JSON needs a \"header\" array");
  if (!j.contains("rows") || !j["rows"].is_array()) throw StructuralError("table JSON needs a \"rows\" array");
  auto cell = [](const json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return "";
    if (v.is_number() || v.is_boolean()) return v.dump();
    throw StructuralError("table cells must be scalars");
  };
  TableSource s;
  if (j.contains("caption") && j["caption"].is_string()) s.caption = j["caption"].get<std::string>();
  for (const auto& h : j["header"]) s.header.push_back(cell(h));
  for (const auto& row : j["rows"]) {
    if (!row.is_array()) throw StructuralError("each table row must be an array");
    std::vector<std::string> r;
    for (const auto& c : row) r.push_back(cell(c));
    s.rows.push_back(std::move(r));
  }
  return s;
}

json result_json(const ResultSet& rs) {
  json rows = json::array(), ids = json::array();
  for (const auto& r : rs.rows) {
    json cells = json::array();
    for (const auto& v : r.values) cells.push_back(v.render());
    rows.push_back(std::move(cells));
    ids.push_back(r.source_row_ids);
  }
  return {{"columns", rs.columns}, {"rows", rows}, {"source_row_ids", ids}};
}

}  // namespace

extern "C" {

const char* ts_version(void) { return TABSENSE_VERSION; }

const char* ts_status_name(ts_status status) {
  switch (status) {
    case TS_OK: return "ok";
    case TS_ERR_STRUCTURAL: return "structural";
    case TS_ERR_SELECTION: return "selection";
    case TS_ERR_QUERY_SYNTAX: return "query_syntax";
    case TS_ERR_QUERY_BIND: return "query_bind";
    case TS_ERR_CONFIG: return "config";
    case TS_ERR_GATEWAY: return "gateway";
    case TS_ERR_IO: return "io";
    case TS_ERR_DATASET: return "dataset";
    case TS_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case TS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* ts_last_error(void) { return g_last_error.c_str(); }

void ts_string_free(char* s) { std::free(s); }

ts_status ts_table_from_json(const char* table_json, ts_table** out) {
  return guarded([&] {
    require(table_json, "table_json");
    require(out, "out");
    *out = nullptr;
    json j;
    try {
      j = json::parse(table_json);
    } catch (const json::exception& e) {
      throw StructuralError(std::string("malformed table JSON: ") + e.what());
    }
    *out = new ts_table{load_table(table_source_from(j))};
  });
}

void ts_table_free(ts_table* table) { delete table; }

size_t ts_table_cell_count(const ts_table* table) { return table ? cell_count(table->table) : 0; }

ts_status ts_table_encode_pipe(const ts_table* table, char** out) {
  return guarded([&] {
    require(table, "table");
    require(out, "out");
    *out = dup_string(encode_pipe(table->table));
  });
}

ts_status ts_table_encode_sql(const ts_table* table, size_t token_budget, char** out) {
  return guarded([&] {
    require(table, "table");
    require(out, "out");
    *out = dup_string(encode_sql_schema(table->table, token_budget).text);
  });
}

ts_status ts_table_query(const ts_table* table, const char* sql, char** out_json) {
  return guarded([&] {
    require(table, "table");
    require(sql, "sql");
    require(out_json, "out_json");
    *out_json = dup_string(result_json(execute(parse_query(sql), table->table)).dump());
  });
}

ts_status ts_session_create(const char* config_json, ts_session** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    RunConfig c = config_from_json(config_json && *config_json ? json::parse(config_json) : json::object());
    validate_config(c, false);
    auto s = std::make_unique<ts_session>(ts_session{
        c, PromptLibrary::load(c.prompt_dir.empty() ? PromptLibrary::default_dir() : std::filesystem::path(c.prompt_dir)),
                   nullptr});
    s->gateway = std::make_unique<Gateway>(make_backend(c));
    *out = s.release();
  });
}

void ts_session_free(ts_session* session) { delete session; }

ts_status ts_session_ask(ts_session* session, const char* request_json, char** out_json) {
  return guarded([&] {
    require(session, "session");
    require(request_json, "request_json");
    require(out_json, "out_json");
    *out_json = nullptr;
    json req = json::parse(request_json);
    if (!req.is_object()) throw ConfigError("request must be a JSON object");
    if (!req.contains("table")) throw StructuralError("request needs a \"table\"");
    if (!req.contains("question") || !req["question"].is_string()) throw ConfigError("request needs a \"question\"");

    ExampleRecord ex;
    ex.id = req.value("id", "ask");
    std::string task = req.value("task", "short_qa");
    auto k = parse_task(task);
    if (!k) throw ConfigError("unknown task \"" + task + "\"");
    ex.task = *k;
    ex.table = table_source_from(req["table"]);
    (void)load_table(ex.table);  // structural errors before any model call
    ex.question = req["question"].get<std::string>();
    bool has_gold = req.contains("gold") && !req["gold"].is_null();
    if (has_gold) ex.gold = req["gold"].is_string() ? req["gold"].get<std::string>() : req["gold"].dump();

    ExampleEnv env{*session->gateway, session->prompts, session->config};
    EvalRecord r = run_example(ex, 0, env);
    if (r.error) {
      if (r.error_code) throw Error(*r.error_code, *r.error);
      throw std::runtime_error(*r.error);
    }
    json trace = record_to_json(r);
    if (!has_gold) {
      trace["gold"] = nullptr;
      trace["metrics"]["correct"] = nullptr;
      for (const char* m : {"rouge1", "rouge2", "rougeL"}) trace["metrics"][m] = nullptr;
    }
    json out = {{"answer", r.answer.text},
                {"label", trace["answer"]["label"]},
                {"abstained", r.answer.abstained},
                {"correct", trace["metrics"]["correct"]},
                {"columns", r.extraction.c_final.names},
                {"rows", r.extraction.r_final.ids},
                {"t_cr", r.t_cr ? json(encode_pipe(*r.t_cr)) : json(nullptr)},
                {"evidence", r.evidence && r.evidence->result ? json(r.evidence->rendered) : json(nullptr)},
                {"trace", trace}};
    *out_json = dup_string(out.dump());
  });
}

ts_status ts_run(const char* config_json, char** out_json) {
  return guarded([&] {
    require(config_json, "config_json");
    g_cancel.store(false);
    RunConfig c = config_from_json(json::parse(config_json));
    RunHooks hooks;
    hooks.stop = &g_cancel;
    RunResult r = run_dataset(c, hooks);
    if (out_json) {
      json out = {{"report", r.report.json},
                  {"text", r.report.text},
                  {"interrupted", r.interrupted},
                  {"output_dir", c.output_dir},
                  {"examples", r.records.size()},
                  {"rejects", r.rejects.size()}};
      *out_json = dup_string(out.dump());
    }
  });
}

void ts_run_cancel(void) { g_cancel.store(true); }

ts_status ts_report(const char* dir, char** out_json, char** out_text) {
  return guarded([&] {
    require(dir, "dir");
    RunReport r = compute_report(load_trace_summaries(dir));
    if (out_json) *out_json = dup_string(r.json.dump(2) + "\n");
    if (out_text) *out_text = dup_string(r.text);
  });
}

}  // extern "C"
