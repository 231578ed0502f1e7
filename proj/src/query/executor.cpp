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
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "tabsense/error.hpp"
#include "tabsense/query.hpp"
#include "text_util.hpp"

namespace tabsense {

namespace sql_semantics {

int compare(const CellValue& a, const CellValue& b) {
  auto x = a.coerce_number();
  auto y = b.coerce_number();
  if (x && y) {
    if (*x < *y) return -1;
    if (*x > *y) return 1;
    return 0;
  }
  std::string l = text::ascii_lower(a.render());
  std::string r = text::ascii_lower(b.render());
  int c = l.compare(r);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

bool like(std::string_view subject, std::string_view pattern) {
  // Iterative wildcard match with single-star backtracking.
  std::size_t s = 0, p = 0;
  std::size_t star_p = std::string_view::npos, star_s = 0;
  while (s < subject.size()) {
    if (p < pattern.size() &&
        (pattern[p] == '_' || text::to_lower(pattern[p]) == text::to_lower(subject[s]))) {
      ++s;
      ++p;
    } else if (p < pattern.size() && pattern[p] == '%') {
      star_p = p++;
      star_s = s;
    } else if (star_p != std::string_view::npos) {
      p = star_p + 1;
      s = ++star_s;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '%') ++p;
  return p == pattern.size();
}

bool truthy(const CellValue& v) {
  auto n = v.coerce_number();
  return n && *n != 0.0;
}

}  // namespace sql_semantics

namespace {

using sql_semantics::compare;
using sql_semantics::truthy;

const std::string kRowId = "row_id";

CellValue boolean(bool b) { return CellValue::number(b ? 1.0 : 0.0, b ? "1" : "0"); }

CellValue numeric_result(double v) {
  if (!std::isfinite(v)) return CellValue::empty();
  return CellValue::number(v);
}

// Grouping / DISTINCT key consistent with compare() == 0.
std::string value_key(const CellValue& v) {
  if (auto n = v.coerce_number()) return "n:" + format_number(*n);
  return "s:" + text::ascii_lower(v.render());
}

bool contains_aggregate(const Expr& e) {
  if (e.kind == ExprKind::aggregate) return true;
  return std::any_of(e.args.begin(), e.args.end(), contains_aggregate);
}

class Binder {
 public:
  explicit Binder(const Table& t) : table_(t) {}

  QueryAst bind(const QueryAst& ast) {
    if (!text::iequals(ast.table, "w")) {
      throw QueryBindError("unknown table '" + ast.table + "'; the only table is w");
    }
    QueryAst out = ast;
    for (auto& item : out.select) {
      if (item.star) continue;
      bind_expr(item.expr, /*allow_aggregate=*/true);
    }
    if (out.where) {
      if (contains_aggregate(*out.where)) throw QueryBindError("aggregate not allowed in WHERE");
      bind_expr(*out.where, false);
    }
    for (auto& g : out.group_by) {
      if (contains_aggregate(g)) throw QueryBindError("aggregate not allowed in GROUP BY");
      bind_expr(g, false);
    }
    for (auto& o : out.order_by) {
      if (const Expr* target = order_target(out, o.expr)) {
        o.expr = *target;
        continue;
      }
      bind_expr(o.expr, true);
    }
    return out;
  }

  std::optional<std::string> resolve_column(std::string_view name) const {
    if (text::iequals(name, kRowId)) return kRowId;
    for (const auto& c : table_.columns()) {
      if (c == name) return c;
    }
    for (const auto& c : table_.columns()) {
      if (text::iequals(c, name)) return c;
    }
    return std::nullopt;
  }

 private:
  // ORDER BY may name a select alias or a 1-based select position.
  const Expr* order_target(const QueryAst& q, const Expr& e) const {
    if (e.kind == ExprKind::column || e.kind == ExprKind::quoted_name) {
      for (const auto& item : q.select) {
        if (!item.star && item.alias && text::iequals(*item.alias, e.name)) return &item.expr;
      }
    }
    if (e.kind == ExprKind::literal && e.literal.is_number()) {
      double v = *e.literal.number_value();
      if (v == std::trunc(v) && v >= 1 && v <= static_cast<double>(q.select.size())) {
        const SelectItem& item = q.select[static_cast<std::size_t>(v) - 1];
        if (!item.star) return &item.expr;
      }
    }
    return nullptr;
  }

  void bind_expr(Expr& e, bool allow_aggregate) {
    switch (e.kind) {
      case ExprKind::column: {
        auto col = resolve_column(e.name);
        if (!col) {
          throw QueryBindError("unknown column '" + e.name + "'; valid columns: " +
                               python_list_literal(table_.columns()));
        }
        e.name = *col;
        return;
      }
      case ExprKind::quoted_name: {
        if (auto col = resolve_column(e.name)) {
          e.kind = ExprKind::column;
          e.name = *col;
        } else {
          e.kind = ExprKind::literal;
          e.literal = CellValue::text(e.name);
          e.name.clear();
        }
        return;
      }
      case ExprKind::aggregate:
        if (!allow_aggregate) throw QueryBindError("aggregate not allowed here");
        for (auto& a : e.args) bind_expr(a, false);
        return;
      default:
        for (auto& a : e.args) bind_expr(a, allow_aggregate);
        return;
    }
  }

  const Table& table_;
};

struct EvalContext {
  const Row* row = nullptr;                     // representative row
  const std::vector<const Row*>* group = nullptr;  // set for aggregate evaluation
};

class Evaluator {
 public:
  explicit Evaluator(const Table& t) {
    for (std::size_t j = 0; j < t.column_count(); ++j) index_.emplace(t.columns()[j], j);
  }

  CellValue eval(const Expr& e, const EvalContext& ctx) const {
    switch (e.kind) {
      case ExprKind::literal:
        return e.literal;
      case ExprKind::column:
        if (!ctx.row) return CellValue::empty();
        if (e.name == kRowId) return CellValue::number(static_cast<double>(ctx.row->id));
        return ctx.row->cells[index_.at(e.name)];
      case ExprKind::quoted_name:
        return CellValue::text(e.name);
      case ExprKind::negate: {
        auto v = eval(e.args[0], ctx).coerce_number();
        return v ? numeric_result(-*v) : CellValue::empty();
      }
      case ExprKind::arithmetic: {
        auto a = eval(e.args[0], ctx).coerce_number();
        auto b = eval(e.args[1], ctx).coerce_number();
        if (!a || !b) return CellValue::empty();
        switch (e.op) {
          case BinaryOp::add: return numeric_result(*a + *b);
          case BinaryOp::sub: return numeric_result(*a - *b);
          case BinaryOp::mul: return numeric_result(*a * *b);
          case BinaryOp::div:
            if (*b == 0.0) return CellValue::empty();
            return numeric_result(*a / *b);
          default: break;
        }
        return CellValue::empty();
      }
      case ExprKind::comparison: {
        int c = compare(eval(e.args[0], ctx), eval(e.args[1], ctx));
        switch (e.op) {
          case BinaryOp::eq: return boolean(c == 0);
          case BinaryOp::ne: return boolean(c != 0);
          case BinaryOp::lt: return boolean(c < 0);
          case BinaryOp::le: return boolean(c <= 0);
          case BinaryOp::gt: return boolean(c > 0);
          case BinaryOp::ge: return boolean(c >= 0);
          default: break;
        }
        return CellValue::empty();
      }
      case ExprKind::logical_and:
        return boolean(truthy(eval(e.args[0], ctx)) && truthy(eval(e.args[1], ctx)));
      case ExprKind::logical_or:
        return boolean(truthy(eval(e.args[0], ctx)) || truthy(eval(e.args[1], ctx)));
      case ExprKind::logical_not:
        return boolean(!truthy(eval(e.args[0], ctx)));
      case ExprKind::like: {
        bool m = sql_semantics::like(eval(e.args[0], ctx).render(), eval(e.args[1], ctx).render());
        return boolean(m != e.negated);
      }
      case ExprKind::in_list: {
        CellValue subject = eval(e.args[0], ctx);
        bool found = false;
        for (std::size_t i = 1; i < e.args.size() && !found; ++i) {
          found = compare(subject, eval(e.args[i], ctx)) == 0;
        }
        return boolean(found != e.negated);
      }
      case ExprKind::between: {
        CellValue x = eval(e.args[0], ctx);
        bool in = compare(x, eval(e.args[1], ctx)) >= 0 && compare(x, eval(e.args[2], ctx)) <= 0;
        return boolean(in != e.negated);
      }
      case ExprKind::is_null:
        return boolean(eval(e.args[0], ctx).is_empty() != e.negated);
      case ExprKind::aggregate:
        return aggregate(e, ctx);
    }
    return CellValue::empty();
  }

 private:
  CellValue aggregate(const Expr& e, const EvalContext& ctx) const {
    static const std::vector<const Row*> kNoRows;
    const auto& group = ctx.group ? *ctx.group : kNoRows;
    if (e.fn == AggregateFn::count && e.args.empty()) {
      return CellValue::number(static_cast<double>(group.size()));
    }
    std::vector<CellValue> values;
    values.reserve(group.size());
    std::set<std::string> seen;
    for (const Row* r : group) {
      CellValue v = eval(e.args[0], EvalContext{r, nullptr});
      if (v.is_empty()) continue;
      if (e.distinct && !seen.insert(value_key(v)).second) continue;
      values.push_back(std::move(v));
    }
    if (e.fn == AggregateFn::count) return CellValue::number(static_cast<double>(values.size()));

    std::vector<double> nums;
    for (const auto& v : values) {
      if (auto n = v.coerce_number()) nums.push_back(*n);
    }
    if (nums.empty()) return CellValue::empty();
    switch (e.fn) {
      case AggregateFn::sum: {
        double s = 0.0;
        for (double n : nums) s += n;
        return numeric_result(s);
      }
      case AggregateFn::avg: {
        double s = 0.0;
        for (double n : nums) s += n;
        return numeric_result(s / static_cast<double>(nums.size()));
      }
      case AggregateFn::min:
        return numeric_result(*std::min_element(nums.begin(), nums.end()));
      case AggregateFn::max:
        return numeric_result(*std::max_element(nums.begin(), nums.end()));
      case AggregateFn::count:
        break;
    }
    return CellValue::empty();
  }

  std::unordered_map<std::string, std::size_t> index_;
};

struct PendingRow {
  ResultRow row;
  std::vector<CellValue> sort_keys;
};

void collect_columns(const Expr& e, std::set<std::string>& out) {
  if (e.kind == ExprKind::column && e.name != kRowId) out.insert(e.name);
  for (const auto& a : e.args) collect_columns(a, out);
}

}  // namespace

ResultSet execute(const QueryAst& ast, const Table& t) {
  QueryAst q = Binder(t).bind(ast);
  Evaluator ev(t);

  ResultSet rs;
  for (const auto& item : q.select) {
    if (item.star) {
      rs.columns.insert(rs.columns.end(), t.columns().begin(), t.columns().end());
    } else if (item.alias) {
      rs.columns.push_back(*item.alias);
    } else if (item.expr.kind == ExprKind::column) {
      rs.columns.push_back(item.expr.name);
    } else {
      rs.columns.push_back(item.source_text);
    }
  }

  std::vector<const Row*> filtered;
  for (const auto& r : t.rows()) {
    if (!q.where || truthy(ev.eval(*q.where, EvalContext{&r, nullptr}))) filtered.push_back(&r);
  }

  auto project = [&](const EvalContext& ctx, std::vector<std::int64_t> ids) {
    PendingRow p;
    p.row.source_row_ids = std::move(ids);
    for (const auto& item : q.select) {
      if (item.star) {
        if (ctx.row) {
          p.row.values.insert(p.row.values.end(), ctx.row->cells.begin(), ctx.row->cells.end());
        } else {
          p.row.values.resize(p.row.values.size() + t.column_count());
        }
      } else {
        p.row.values.push_back(ev.eval(item.expr, ctx));
      }
    }
    for (const auto& o : q.order_by) p.sort_keys.push_back(ev.eval(o.expr, ctx));
    return p;
  };

  bool aggregate_query = !q.group_by.empty();
  for (const auto& item : q.select) {
    if (!item.star && contains_aggregate(item.expr)) aggregate_query = true;
  }
  for (const auto& o : q.order_by) {
    if (contains_aggregate(o.expr)) aggregate_query = true;
  }

  std::vector<PendingRow> pending;
  if (!aggregate_query) {
    for (const Row* r : filtered) pending.push_back(project(EvalContext{r, nullptr}, {r->id}));
  } else {
    std::vector<std::vector<const Row*>> groups;
    if (q.group_by.empty()) {
      groups.push_back(filtered);
    } else {
      std::map<std::vector<std::string>, std::size_t> slot;
      for (const Row* r : filtered) {
        std::vector<std::string> key;
        for (const auto& g : q.group_by) key.push_back(value_key(ev.eval(g, EvalContext{r, nullptr})));
        auto [it, inserted] = slot.emplace(std::move(key), groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(r);
      }
    }
    for (const auto& g : groups) {
      std::vector<std::int64_t> ids;
      for (const Row* r : g) ids.push_back(r->id);
      std::sort(ids.begin(), ids.end());
      EvalContext ctx{g.empty() ? nullptr : g.front(), &g};
      pending.push_back(project(ctx, std::move(ids)));
    }
  }

  if (q.distinct) {
    std::vector<PendingRow> unique;
    std::map<std::vector<std::string>, std::size_t> slot;
    for (auto& p : pending) {
      std::vector<std::string> key;
      for (const auto& v : p.row.values) key.push_back(value_key(v));
      auto [it, inserted] = slot.emplace(std::move(key), unique.size());
      if (inserted) {
        unique.push_back(std::move(p));
      } else {
        auto& ids = unique[it->second].row.source_row_ids;
        ids.insert(ids.end(), p.row.source_row_ids.begin(), p.row.source_row_ids.end());
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      }
    }
    pending = std::move(unique);
  }

  if (!q.order_by.empty()) {
    std::stable_sort(pending.begin(), pending.end(), [&](const PendingRow& a, const PendingRow& b) {
      for (std::size_t k = 0; k < q.order_by.size(); ++k) {
        int c = compare(a.sort_keys[k], b.sort_keys[k]);
        if (c != 0) return q.order_by[k].descending ? c > 0 : c < 0;
      }
      return false;
    });
  }

  std::size_t begin = 0;
  std::size_t end = pending.size();
  if (q.offset && *q.offset > 0) begin = std::min(end, static_cast<std::size_t>(*q.offset));
  if (q.limit && *q.limit >= 0) end = std::min(end, begin + static_cast<std::size_t>(*q.limit));
  for (std::size_t i = begin; i < end; ++i) rs.rows.push_back(std::move(pending[i].row));
  return rs;
}

ColumnSet referenced_columns(const QueryAst& ast, const Table& t) {
  QueryAst q = Binder(t).bind(ast);
  std::set<std::string> names;
  bool star = false;
  for (const auto& item : q.select) {
    if (item.star) {
      star = true;
    } else {
      collect_columns(item.expr, names);
    }
  }
  if (q.where) collect_columns(*q.where, names);
  for (const auto& g : q.group_by) collect_columns(g, names);
  for (const auto& o : q.order_by) collect_columns(o.expr, names);
  if (star) return ColumnSet::all_of(t);
  std::vector<std::string> list(names.begin(), names.end());
  return ColumnSet::in_table_order(t, list);
}

RowIdSet result_row_ids(const ResultSet& rs) {
  std::vector<std::int64_t> ids;
  for (const auto& r : rs.rows) ids.insert(ids.end(), r.source_row_ids.begin(), r.source_row_ids.end());
  return RowIdSet::from(std::move(ids));
}

Table result_as_table(const ResultSet& rs) {
  std::vector<std::string> columns = sanitize_headers(rs.columns);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < rs.rows.size(); ++i) {
    rows.push_back(Row{static_cast<std::int64_t>(i + 1), rs.rows[i].values});
  }
  return Table(std::nullopt, std::move(columns), std::move(rows));
}

}  // namespace tabsense
