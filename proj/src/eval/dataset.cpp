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

#include "tabsense/error.hpp"
#include "tabsense/eval.hpp"
#include "text_util.hpp"

namespace tabsense {

using nlohmann::json;

const char* dataset_format_name(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::neutral: return "neutral";
    case DatasetFormat::tabfact: return "tabfact";
    case DatasetFormat::wikitq: return "wikitq";
    case DatasetFormat::fetaqa: return "fetaqa";
  }
  return "neutral";
}

std::optional<DatasetFormat> parse_dataset_format(std::string_view s) {
  for (DatasetFormat f : {DatasetFormat::neutral, DatasetFormat::tabfact, DatasetFormat::wikitq, DatasetFormat::fetaqa}) {
    if (s == dataset_format_name(f)) return f;
  }
  return std::nullopt;
}

namespace {

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number()) return format_number(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_null()) return "";
  throw DatasetError("expected a scalar, got " + std::string(v.type_name()));
}

const json& require(const json& j, const char* key) {
  if (!j.contains(key)) throw DatasetError(std::string("missing \"") + key + "\"");
  return j.at(key);
}

std::string require_string(const json& j, const char* key) {
  const json& v = require(j, key);
  std::string s = scalar_text(v);
  if (text::trim(s).empty()) throw DatasetError(std::string("empty \"") + key + "\"");
  return s;
}

std::vector<std::string> string_row(const json& row) {
  if (!row.is_array()) throw DatasetError("table row is not an array");
  std::vector<std::string> out;
  for (const auto& c : row) out.push_back(scalar_text(c));
  return out;
}

TableSource table_from_grid(const json& grid, std::optional<std::string> caption) {
  if (!grid.is_array() || grid.empty()) throw DatasetError("table grid must be a non-empty array of rows");
  TableSource t;
  t.caption = std::move(caption);
  t.header = string_row(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) t.rows.push_back(string_row(grid[i]));
  return t;
}

TableSource table_from_object(const json& tj) {
  if (!tj.is_object()) throw DatasetError("\"table\" must be an object");
  TableSource t;
  for (const char* key : {"caption", "page_title", "title"}) {
    if (tj.contains(key) && tj[key].is_string() && !tj[key].get<std::string>().empty()) {
      t.caption = tj[key].get<std::string>();
      break;
    }
  }
  t.header = string_row(require(tj, "header"));
  const json& rows = require(tj, "rows");
  if (!rows.is_array()) throw DatasetError("\"rows\" must be an array");
  for (const auto& r : rows) t.rows.push_back(string_row(r));
  return t;
}

std::string fv_label(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? "entailed" : "refuted";
  if (v.is_number_integer()) {
    auto n = v.get<std::int64_t>();
    if (n == 1) return "entailed";
    if (n == 0) return "refuted";
  }
  if (v.is_string()) {
    std::string s = text::ascii_lower(text::trim(v.get<std::string>()));
    if (s == "1" || s == "entailed" || s == "true" || s == "yes") return "entailed";
    if (s == "0" || s == "refuted" || s == "false" || s == "no") return "refuted";
  }
  throw DatasetError("fact-verification label must be entailed/refuted or 1/0");
}

std::string answer_list(const json& v) {
  if (v.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "|" : "") + scalar_text(v[i]);
    if (out.empty()) throw DatasetError("empty answer list");
    return out;
  }
  std::string s = scalar_text(v);
  if (s.empty()) throw DatasetError("empty answer");
  return s;
}

}  // namespace

ExampleRecord parse_example(const json& j, DatasetFormat format, std::size_t line) {
  if (!j.is_object()) throw DatasetError("line is not a JSON object");
  ExampleRecord r;
  auto id_or_line = [&](const char* key) {
    return j.contains(key) ? scalar_text(j[key]) : "line-" + std::to_string(line);
  };
  switch (format) {
    case DatasetFormat::neutral: {
      r.id = require_string(j, "id");
      std::string task = require_string(j, "task");
      auto k = parse_task(task);
      if (!k) throw DatasetError("unknown task \"" + task + "\"");
      r.task = *k;
      r.table = table_from_object(require(j, "table"));
      r.question = require_string(j, "question");
      r.gold = r.task == TaskKind::fact_verification ? fv_label(require(j, "gold")) : answer_list(require(j, "gold"));
      if (j.contains("metadata")) r.metadata = j["metadata"];
      break;
    }
    case DatasetFormat::tabfact: {
      r.id = id_or_line("id");
      r.task = TaskKind::fact_verification;
      std::optional<std::string> caption;
      if (j.contains("table_caption") && j["table_caption"].is_string()) caption = j["table_caption"].get<std::string>();
      r.table = table_from_grid(require(j, "table_text"), caption);
      r.question = require_string(j, "statement");
      r.gold = fv_label(require(j, "label"));
      break;
    }
    case DatasetFormat::wikitq: {
      r.id = id_or_line("id");
      r.task = TaskKind::short_qa;
      r.table = table_from_object(require(j, "table"));
      r.question = require_string(j, "question");
      r.gold = answer_list(j.contains("answer_text") ? j["answer_text"] : require(j, "target_value"));
      break;
    }
    case DatasetFormat::fetaqa: {
      r.id = j.contains("feta_id") ? scalar_text(j["feta_id"]) : id_or_line("id");
      r.task = TaskKind::long_qa;
      std::optional<std::string> caption;
      std::string page = j.value("table_page_title", "");
      std::string section = j.value("table_section_title", "");
      if (!page.empty() || !section.empty()) {
        caption = page.empty() ? section : section.empty() ? page : page + " - " + section;
      }
      r.table = table_from_grid(require(j, "table_array"), caption);
      r.question = require_string(j, "question");
      r.gold = require_string(j, "answer");
      break;
    }
  }
  // Structural problems (ragged rows) surface here rather than mid-run.
  try {
    (void)load_table(r.table);
  } catch (const StructuralError& e) {
    throw DatasetError(std::string("bad table: ") + e.what());
  }
  return r;
}

DatasetLoad load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read dataset " + path.string());
  DatasetLoad out;
  std::string line;
  std::size_t lineno = 0;
  std::size_t attempted = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    ++attempted;
    try {
      json j = json::parse(line);
      out.records.push_back(parse_example(j, format, lineno));
    } catch (const json::exception& e) {
      out.rejects.push_back({lineno, std::string("invalid JSON: ") + e.what()});
    } catch (const DatasetError& e) {
      out.rejects.push_back({lineno, e.what()});
    }
  }
  if (attempted == 0) throw DatasetError("dataset " + path.string() + " has no examples");
  if (out.rejects.size() * 2 > attempted) {
    throw DatasetError("dataset " + path.string() + ": " + std::to_string(out.rejects.size()) + " of " +
                       std::to_string(attempted) + " lines rejected; first: line " +
                       std::to_string(out.rejects.front().line) + ": " + out.rejects.front().reason);
  }
  return out;
}

}  // namespace tabsense
