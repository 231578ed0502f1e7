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

#include "tabsense/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_set>

#include "tabsense/error.hpp"
#include "text_util.hpp"

namespace tabsense {

std::optional<double> parse_numeric(std::string_view lexeme) {
  std::string_view s = text::trim(lexeme);
  if (s.empty()) return std::nullopt;
  std::size_t i = 0;
  bool negative = false;
  if (s[i] == '+' || s[i] == '-') {
    negative = s[i] == '-';
    ++i;
  }
  std::string digits;
  if (negative) digits.push_back('-');

  // Integer part: plain digits, or 1-3 digits followed by ,ddd groups.
  std::size_t int_start = i;
  while (i < s.size() && text::is_digit(s[i])) digits.push_back(s[i++]);
  std::size_t lead = i - int_start;
  if (i < s.size() && s[i] == ',') {
    if (lead == 0 || lead > 3) return std::nullopt;
    while (i < s.size() && s[i] == ',') {
      if (s.size() - i < 4) return std::nullopt;
      for (std::size_t k = 1; k <= 3; ++k) {
        if (!text::is_digit(s[i + k])) return std::nullopt;
        digits.push_back(s[i + k]);
      }
      i += 4;
      if (i < s.size() && text::is_digit(s[i])) return std::nullopt;
    }
  }
  bool has_int = i > int_start;
  bool has_frac = false;
  if (i < s.size() && s[i] == '.') {
    digits.push_back('.');
    ++i;
    while (i < s.size() && text::is_digit(s[i])) {
      digits.push_back(s[i++]);
      has_frac = true;
    }
    if (!has_frac) return std::nullopt;
  }
  if (i != s.size() || (!has_int && !has_frac)) return std::nullopt;

  double value = 0.0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  return value;
}

std::string format_number(double value) {
  if (!std::isfinite(value)) return {};
  if (value == std::trunc(value) && std::fabs(value) < 1e15) {
    long long as_int = static_cast<long long>(value);
    return std::to_string(as_int);
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

CellValue CellValue::text(std::string text) {
  CellValue v;
  if (text.empty()) return v;
  v.kind_ = Kind::text;
  v.lexeme_ = std::move(text);
  return v;
}

CellValue CellValue::number(double value, std::string lexeme) {
  CellValue v;
  v.kind_ = Kind::number;
  v.value_ = value;
  v.lexeme_ = std::move(lexeme);
  return v;
}

CellValue CellValue::from_lexeme(std::string_view raw) {
  std::string cleaned = clean_cell(raw);
  if (cleaned.empty()) return CellValue{};
  if (auto n = parse_numeric(cleaned)) return number(*n, std::move(cleaned));
  return text(std::move(cleaned));
}

std::optional<double> CellValue::coerce_number() const {
  switch (kind_) {
    case Kind::number:
      return value_;
    case Kind::text:
      return parse_numeric(lexeme_);
    case Kind::empty:
      break;
  }
  return std::nullopt;
}

Table::Table(std::optional<std::string> caption, std::vector<std::string> columns,
             std::vector<Row> rows)
    : caption_(std::move(caption)), columns_(std::move(columns)), rows_(std::move(rows)) {
  std::unordered_set<std::string> names;
  for (const auto& c : columns_) {
    if (!names.insert(c).second) throw StructuralError("duplicate column name '" + c + "'");
  }
  std::unordered_set<std::int64_t> ids;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const Row& r = rows_[i];
    if (r.cells.size() != columns_.size()) {
      throw StructuralError("row " + std::to_string(i + 1) + " has " +
                            std::to_string(r.cells.size()) + " cells, expected " +
                            std::to_string(columns_.size()));
    }
    if (r.id <= 0) throw StructuralError("row id must be positive, got " + std::to_string(r.id));
    if (!ids.insert(r.id).second) {
      throw StructuralError("duplicate row id " + std::to_string(r.id));
    }
  }
}

std::optional<std::size_t> Table::column_index(std::string_view name) const {
  auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns_.begin());
}

const Row* Table::find_row(std::int64_t id) const {
  for (const auto& r : rows_) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

std::vector<std::int64_t> Table::row_ids() const {
  std::vector<std::int64_t> ids;
  ids.reserve(rows_.size());
  for (const auto& r : rows_) ids.push_back(r.id);
  return ids;
}

bool ColumnSet::contains(std::string_view name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

ColumnSet ColumnSet::in_table_order(const Table& table, std::span<const std::string> names) {
  ColumnSet out;
  for (const auto& col : table.columns()) {
    if (std::find(names.begin(), names.end(), col) != names.end()) out.names.push_back(col);
  }
  return out;
}

ColumnSet ColumnSet::all_of(const Table& table) { return ColumnSet{table.columns()}; }

ColumnSet ColumnSet::merge(const Table& table, const ColumnSet& a, const ColumnSet& b) {
  std::vector<std::string> both = a.names;
  both.insert(both.end(), b.names.begin(), b.names.end());
  return in_table_order(table, both);
}

bool RowIdSet::contains(std::int64_t id) const {
  return std::binary_search(ids.begin(), ids.end(), id);
}

RowIdSet RowIdSet::from(std::vector<std::int64_t> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return RowIdSet{std::move(ids)};
}

RowIdSet RowIdSet::all_of(const Table& table) { return from(table.row_ids()); }

RowIdSet RowIdSet::merge(const RowIdSet& a, const RowIdSet& b) {
  std::vector<std::int64_t> ids = a.ids;
  ids.insert(ids.end(), b.ids.begin(), b.ids.end());
  return from(std::move(ids));
}

std::vector<std::string> sanitize_headers(std::span<const std::string> raw) {
  std::vector<std::string> out;
  out.reserve(raw.size());
  std::set<std::string> taken{"row_id"};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    std::string name = text::collapse_whitespace(text::ascii_lower(raw[i]));
    if (name.empty()) name = "col_" + std::to_string(i + 1);
    if (taken.count(name) != 0) {
      int suffix = 2;
      while (taken.count(name + "_" + std::to_string(suffix)) != 0) ++suffix;
      name += "_" + std::to_string(suffix);
    }
    taken.insert(name);
    out.push_back(std::move(name));
  }
  return out;
}

std::string clean_cell(std::string_view raw) {
  std::string out(raw);
  for (char& c : out) {
    if (c == '\n' || c == '\r' || c == '\t' || c == '\v' || c == '\f') c = ' ';
  }
  return std::string(text::trim(out));
}

Table load_table(const TableSource& raw) {
  std::vector<std::string> columns = sanitize_headers(raw.header);
  std::vector<Row> rows;
  rows.reserve(raw.rows.size());
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    const auto& grid_row = raw.rows[i];
    if (grid_row.size() != columns.size()) {
      throw StructuralError("ragged grid: row " + std::to_string(i + 1) + " has " +
                            std::to_string(grid_row.size()) + " cells, header has " +
                            std::to_string(columns.size()));
    }
    Row r;
    r.id = static_cast<std::int64_t>(i + 1);
    r.cells.reserve(grid_row.size());
    for (const auto& cell : grid_row) r.cells.push_back(CellValue::from_lexeme(cell));
    rows.push_back(std::move(r));
  }
  std::optional<std::string> caption;
  if (raw.caption && !text::trim(*raw.caption).empty()) caption = clean_cell(*raw.caption);
  return Table(std::move(caption), std::move(columns), std::move(rows));
}

Table transpose(const Table& t) {
  std::vector<std::string> columns{"column"};
  for (const auto& r : t.rows()) columns.push_back("row " + std::to_string(r.id));
  std::vector<Row> rows;
  rows.reserve(t.column_count());
  for (std::size_t j = 0; j < t.column_count(); ++j) {
    Row out;
    out.id = static_cast<std::int64_t>(j + 1);
    out.cells.push_back(CellValue::from_lexeme(t.columns()[j]));
    for (const auto& r : t.rows()) out.cells.push_back(r.cells[j]);
    rows.push_back(std::move(out));
  }
  return Table(t.caption(), std::move(columns), std::move(rows));
}

Table filter_columns(const Table& t, const ColumnSet& c) {
  if (c.empty()) throw SelectionError("empty column selection");
  for (const auto& name : c.names) {
    if (!t.column_index(name)) {
      throw SelectionError("unknown column '" + name + "'; valid columns: " +
                           python_list_literal(t.columns()));
    }
  }
  std::vector<std::size_t> keep;
  std::vector<std::string> columns;
  for (std::size_t j = 0; j < t.column_count(); ++j) {
    if (c.contains(t.columns()[j])) {
      keep.push_back(j);
      columns.push_back(t.columns()[j]);
    }
  }
  std::vector<Row> rows;
  rows.reserve(t.row_count());
  for (const auto& r : t.rows()) {
    Row out{r.id, {}};
    out.cells.reserve(keep.size());
    for (std::size_t j : keep) out.cells.push_back(r.cells[j]);
    rows.push_back(std::move(out));
  }
  return Table(t.caption(), std::move(columns), std::move(rows));
}

Table filter_rows(const Table& t, const RowIdSet& r) {
  if (r.empty()) throw SelectionError("empty row selection");
  for (auto id : r.ids) {
    if (!t.find_row(id)) throw SelectionError("unknown row id " + std::to_string(id));
  }
  std::vector<Row> rows;
  for (const auto& row : t.rows()) {
    if (r.contains(row.id)) rows.push_back(row);
  }
  return Table(t.caption(), t.columns(), std::move(rows));
}

std::size_t cell_count(const Table& t) { return t.row_count() * t.column_count(); }

std::size_t token_estimate(std::string_view s) {
  std::size_t tokens = 0;
  std::size_t run = 0;
  auto flush = [&] {
    if (run > 0) tokens += (run + 7) / 8;
    run = 0;
  };
  for (unsigned char c : s) {
    if (text::is_space(static_cast<char>(c))) {
      flush();
    } else if ((c & 0xC0) != 0x80) {
      ++run;
    }
  }
  flush();
  return tokens;
}

std::string python_list_literal(std::span<const std::string> items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    const std::string& s = items[i];
    bool has_single = s.find('\'') != std::string::npos;
    bool has_double = s.find('"') != std::string::npos;
    char quote = (has_single && !has_double) ? '"' : '\'';
    out.push_back(quote);
    for (char c : s) {
      if (c == '\\' || c == quote) out.push_back('\\');
      out.push_back(c);
    }
    out.push_back(quote);
  }
  out += "]";
  return out;
}

namespace {

// Row line grammar: "row <id>:" then per cell an optional " <text>",
// with " |" between cells. An empty cell contributes nothing.
std::string pipe_row(const Row& r) {
  std::string line = "row " + std::to_string(r.id) + ":";
  for (std::size_t j = 0; j < r.cells.size(); ++j) {
    if (j > 0) line += " |";
    const std::string& v = r.cells[j].render();
    if (!v.empty()) {
      line.push_back(' ');
      line += v;
    }
  }
  return line;
}

std::vector<std::string> split_pipe_fields(std::string_view rest) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t bar = rest.find('|', start);
    std::string_view piece = rest.substr(start, bar == std::string_view::npos ? rest.npos : bar - start);
    out.emplace_back(text::trim(piece));
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return out;
}

}  // namespace

std::string encode_pipe(const Table& t) {
  std::vector<std::string> lines;
  if (t.caption()) lines.push_back("table caption: " + *t.caption());
  lines.emplace_back("/");
  lines.push_back("col : " + text::join(t.columns(), " | "));
  for (const auto& r : t.rows()) lines.push_back(pipe_row(r));
  lines.emplace_back("*/");
  lines.push_back("columns: " + python_list_literal(t.columns()));
  return text::join(lines, "\n");
}

Table decode_pipe(std::string_view encoded) {
  std::vector<std::string> lines = text::split_lines(encoded);
  std::size_t i = 0;
  std::optional<std::string> caption;
  constexpr std::string_view caption_tag = "table caption: ";
  if (i < lines.size() && lines[i].starts_with(caption_tag)) {
    caption = lines[i].substr(caption_tag.size());
    ++i;
  }
  if (i >= lines.size() || lines[i] != "/") throw StructuralError("pipe table: expected '/'");
  ++i;
  constexpr std::string_view header_tag = "col :";
  if (i >= lines.size() || !lines[i].starts_with(header_tag)) {
    throw StructuralError("pipe table: expected 'col :' header");
  }
  std::vector<std::string> columns =
      split_pipe_fields(std::string_view(lines[i]).substr(header_tag.size()));
  ++i;
  std::vector<Row> rows;
  for (; i < lines.size() && lines[i] != "*/"; ++i) {
    std::string_view line = lines[i];
    if (!line.starts_with("row ")) throw StructuralError("pipe table: bad row line '" + lines[i] + "'");
    std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) throw StructuralError("pipe table: missing ':' in row line");
    std::int64_t id = 0;
    std::string_view id_text = line.substr(4, colon - 4);
    auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec != std::errc{} || ptr != id_text.data() + id_text.size()) {
      throw StructuralError("pipe table: bad row id '" + std::string(id_text) + "'");
    }
    Row r{id, {}};
    for (auto& f : split_pipe_fields(line.substr(colon + 1))) r.cells.push_back(CellValue::from_lexeme(f));
    rows.push_back(std::move(r));
  }
  if (i >= lines.size()) throw StructuralError("pipe table: missing '*/'");
  return Table(std::move(caption), std::move(columns), std::move(rows));
}

std::string sql_column_type(const Table& t, std::size_t column) {
  bool any = false;
  bool fractional = false;
  for (const auto& r : t.rows()) {
    const CellValue& v = r.cells[column];
    if (v.is_empty()) continue;
    if (!v.is_number()) return "text";
    any = true;
    if (v.render().find('.') != std::string::npos) fractional = true;
  }
  if (!any) return "text";
  return fractional ? "real" : "int";
}

SqlSchemaEncoding encode_sql_schema(const Table& t, std::size_t token_budget) {
  std::vector<std::string> head;
  head.push_back("CREATE TABLE " + t.caption().value_or("w") + "(");
  std::vector<std::string> decls{"row_id int"};
  for (std::size_t j = 0; j < t.column_count(); ++j) {
    decls.push_back(t.columns()[j] + " " + sql_column_type(t, j));
  }
  for (std::size_t k = 0; k < decls.size(); ++k) {
    head.push_back("\t" + decls[k] + (k + 1 == decls.size() ? ")" : ","));
  }
  head.emplace_back("/");
  head.emplace_back("All rows of the table:");
  head.emplace_back("SELECT * FROM w;");
  std::vector<std::string> header_cells{"row_id"};
  header_cells.insert(header_cells.end(), t.columns().begin(), t.columns().end());
  head.push_back(text::join(header_cells, "\t"));

  std::vector<std::string> tail{"/", "columns: " + python_list_literal(t.columns())};

  std::vector<std::string> row_lines;
  row_lines.reserve(t.row_count());
  for (const auto& r : t.rows()) {
    std::vector<std::string> cells{std::to_string(r.id)};
    for (const auto& c : r.cells) cells.push_back(c.render());
    row_lines.push_back(text::join(cells, "\t"));
  }

  // Lines are newline-joined and newlines are whitespace, so the estimate
  // is additive over lines.
  std::size_t fixed = 0;
  for (const auto& l : head) fixed += token_estimate(l);
  for (const auto& l : tail) fixed += token_estimate(l);
  std::size_t kept = 0;
  std::size_t used = fixed;
  while (kept < row_lines.size()) {
    std::size_t next = used + token_estimate(row_lines[kept]);
    if (next > token_budget) break;
    used = next;
    ++kept;
  }

  std::vector<std::string> lines = std::move(head);
  lines.insert(lines.end(), row_lines.begin(), row_lines.begin() + static_cast<std::ptrdiff_t>(kept));
  lines.insert(lines.end(), tail.begin(), tail.end());
  return SqlSchemaEncoding{text::join(lines, "\n"), kept, row_lines.size() - kept};
}

}  // namespace tabsense
