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
#include <string>
#include <string_view>
#include <vector>

#include "tabsense/table.hpp"

namespace tabsense {

enum class ExprKind {
  literal,
  column,       // bare identifier
  quoted_name,  // "x": a column if one matches at bind time, else a string literal
  negate,       // unary minus
  arithmetic,   // + - * /
  comparison,   // = != < <= > >=
  logical_and,
  logical_or,
  logical_not,
  like,
  in_list,
  between,
  is_null,
  aggregate,
};

enum class BinaryOp { add, sub, mul, div, eq, ne, lt, le, gt, ge };
enum class AggregateFn { count, sum, min, max, avg };

// Expression node. Children live in `args` by value so ASTs copy freely.
//   arithmetic / comparison / logical_and / logical_or: args = {lhs, rhs}
//   negate / logical_not / is_null: args = {operand}
//   like: {subject, pattern}; between: {subject, low, high}
//   in_list: {subject, item...}
//   aggregate: {argument}, or empty for COUNT(*)
struct Expr {
  ExprKind kind = ExprKind::literal;
  BinaryOp op = BinaryOp::add;
  AggregateFn fn = AggregateFn::count;
  bool negated = false;   // NOT LIKE / NOT IN / NOT BETWEEN / IS NOT NULL
  bool distinct = false;  // aggregate over DISTINCT values
  std::string name;       // column and quoted_name nodes
  CellValue literal;
  std::vector<Expr> args;
  std::size_t offset = 0;
};

struct SelectItem {
  bool star = false;
  Expr expr;
  std::optional<std::string> alias;
  std::string source_text;  // used as the output column name when unaliased
};

struct OrderItem {
  Expr expr;
  bool descending = false;
};

struct QueryAst {
  bool distinct = false;
  std::vector<SelectItem> select;
  std::string table;
  std::optional<Expr> where;
  std::vector<Expr> group_by;
  std::vector<OrderItem> order_by;
  std::optional<std::int64_t> limit;
  std::optional<std::int64_t> offset;
};

struct ResultRow {
  std::vector<std::int64_t> source_row_ids;  // ascending
  std::vector<CellValue> values;
};

struct ResultSet {
  std::vector<std::string> columns;
  std::vector<ResultRow> rows;
};

// Parses one SELECT statement. Keywords are case-insensitive; a trailing
// semicolon is accepted. Throws QuerySyntaxError with the byte offset and
// the set of expected tokens.
QueryAst parse_query(std::string_view text);

// Runs the query against `t`, registered as table `w`. The implicit
// `row_id` column is always available. Throws QueryBindError for unknown
// columns or tables and misplaced aggregates.
ResultSet execute(const QueryAst& ast, const Table& t);

// Table columns referenced anywhere in the query, excluding row_id, in
// table order. `*` references every column.
ColumnSet referenced_columns(const QueryAst& ast, const Table& t);

// Union of source_row_ids across result rows.
RowIdSet result_row_ids(const ResultSet& rs);

// Value semantics shared by the evaluator. Exposed for testing.
namespace sql_semantics {

// Numeric when both sides coerce, else case-insensitive string order.
int compare(const CellValue& a, const CellValue& b);

// Case-insensitive LIKE with % and _ wildcards.
bool like(std::string_view subject, std::string_view pattern);

bool truthy(const CellValue& v);

}  // namespace sql_semantics

// Renders a result set as a small table whose rows are numbered 1..n.
Table result_as_table(const ResultSet& rs);

}  // namespace tabsense
