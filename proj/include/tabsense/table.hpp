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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tabsense {

// Parses a lexeme under the numeric typing rule: optional sign, digits with
// optional thousands commas, optional fractional part. Surrounding whitespace
// is ignored. Commas are stripped for the value.
std::optional<double> parse_numeric(std::string_view lexeme);

// Canonical rendering for computed numbers: integral values print without a
// fractional part, everything else uses the shortest round-trip form.
std::string format_number(double value);

class CellValue {
 public:
  enum class Kind { empty, text, number };

  CellValue() = default;

  static CellValue empty() { return CellValue{}; }
  static CellValue text(std::string text);
  static CellValue number(double value, std::string lexeme);
  static CellValue number(double value) { return number(value, format_number(value)); }

  // Types a raw cell: blank -> empty, numeric lexeme -> number (keeping the
  // lexeme), anything else -> text.
  static CellValue from_lexeme(std::string_view raw);

  Kind kind() const noexcept { return kind_; }
  bool is_empty() const noexcept { return kind_ == Kind::empty; }
  bool is_number() const noexcept { return kind_ == Kind::number; }

  // The number for number cells; nullopt otherwise.
  std::optional<double> number_value() const noexcept {
    if (kind_ == Kind::number) return value_;
    return std::nullopt;
  }

  // Number for number cells, parsed value for numeric-looking text.
  std::optional<double> coerce_number() const;

  const std::string& render() const noexcept { return lexeme_; }

  friend bool operator==(const CellValue& a, const CellValue& b) {
    return a.kind_ == b.kind_ && a.lexeme_ == b.lexeme_;
  }

 private:
  Kind kind_ = Kind::empty;
  std::string lexeme_;
  double value_ = 0.0;
};

struct Row {
  std::int64_t id = 0;
  std::vector<CellValue> cells;
};

// Raw tabular input: header plus a grid of strings.
struct TableSource {
  std::optional<std::string> caption;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Immutable table with stable 1-based row identifiers. Filtering keeps the
// original identifiers.
class Table {
 public:
  Table() = default;

  // Throws StructuralError if a row's width differs from the column count,
  // row ids repeat or are non-positive, or column names repeat.
  Table(std::optional<std::string> caption, std::vector<std::string> columns,
        std::vector<Row> rows);

  const std::optional<std::string>& caption() const noexcept { return caption_; }
  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<Row>& rows() const noexcept { return rows_; }

  std::size_t column_count() const noexcept { return columns_.size(); }
  std::size_t row_count() const noexcept { return rows_.size(); }

  std::optional<std::size_t> column_index(std::string_view name) const;
  const Row* find_row(std::int64_t id) const;
  std::vector<std::int64_t> row_ids() const;

 private:
  std::optional<std::string> caption_;
  std::vector<std::string> columns_;
  std::vector<Row> rows_;
};

// Column selection ordered by first appearance in the source table.
struct ColumnSet {
  std::vector<std::string> names;

  bool empty() const noexcept { return names.empty(); }
  std::size_t size() const noexcept { return names.size(); }
  bool contains(std::string_view name) const;

  // Keeps the names present in `table`, deduplicated, in table order.
  static ColumnSet in_table_order(const Table& table,
                                  std::span<const std::string> names);
  static ColumnSet all_of(const Table& table);
  static ColumnSet merge(const Table& table, const ColumnSet& a, const ColumnSet& b);

  friend bool operator==(const ColumnSet&, const ColumnSet&) = default;
};

// Ascending, deduplicated row identifiers.
struct RowIdSet {
  std::vector<std::int64_t> ids;

  bool empty() const noexcept { return ids.empty(); }
  std::size_t size() const noexcept { return ids.size(); }
  bool contains(std::int64_t id) const;

  static RowIdSet from(std::vector<std::int64_t> ids);
  static RowIdSet all_of(const Table& table);
  static RowIdSet merge(const RowIdSet& a, const RowIdSet& b);

  friend bool operator==(const RowIdSet&, const RowIdSet&) = default;
};

// Lowercase, trim, collapse whitespace; blank names become `col_<n>`;
// duplicates (including the reserved `row_id`) get `_2`, `_3`, ... suffixes.
std::vector<std::string> sanitize_headers(std::span<const std::string> raw);

// Cleans a raw cell: trims and folds internal line breaks to spaces.
std::string clean_cell(std::string_view raw);

Table load_table(const TableSource& raw);

Table transpose(const Table& t);
Table filter_columns(const Table& t, const ColumnSet& c);
Table filter_rows(const Table& t, const RowIdSet& r);

std::size_t cell_count(const Table& t);

// Approximate token count: each maximal non-whitespace run of L code points
// counts ceil(L / 8) tokens.
std::size_t token_estimate(std::string_view s);

// Python-style list literal, e.g. ['name', 'league', 'total'].
std::string python_list_literal(std::span<const std::string> items);

// Line-oriented PIPE rendering used by the text-reasoning prompts.
std::string encode_pipe(const Table& t);

// Inverse of encode_pipe for cells that contain no '|' and no line breaks.
// Cells come back typed by CellValue::from_lexeme.
Table decode_pipe(std::string_view text);

struct SqlSchemaEncoding {
  std::string text;
  std::size_t rows_kept = 0;
  std::size_t rows_dropped = 0;
};

// Declared SQL type for a column: int / real when every non-empty cell is
// numeric, text otherwise.
std::string sql_column_type(const Table& t, std::size_t column);

// CREATE TABLE + tab-separated rows rendering used by the SQL prompts.
// Trailing data rows are dropped while the rendering exceeds token_budget.
SqlSchemaEncoding encode_sql_schema(const Table& t, std::size_t token_budget);

}  // namespace tabsense
