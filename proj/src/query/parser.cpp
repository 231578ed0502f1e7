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
#include <charconv>

#include "tabsense/error.hpp"
#include "tabsense/query.hpp"
#include "text_util.hpp"

namespace tabsense {

namespace {

enum class TokenKind { identifier, quoted_identifier, string, number, symbol, end };

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;  // identifier/string contents, symbol spelling, number lexeme
  std::size_t offset = 0;
  std::size_t end = 0;
};

constexpr std::string_view kReserved[] = {
    "select", "distinct", "from", "where", "group", "by",   "order", "limit", "offset", "and",
    "or",     "not",      "like", "in",    "between", "is", "null",  "as",    "asc",    "desc"};

bool is_reserved(std::string_view word) {
  std::string lower = text::ascii_lower(word);
  return std::find(std::begin(kReserved), std::end(kReserved), lower) != std::end(kReserved);
}

bool ident_start(char c) {
  return text::is_alpha(c) || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}
bool ident_char(char c) { return ident_start(c) || text::is_digit(c); }

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto fail = [&](std::size_t at, std::string what) -> void {
    throw QuerySyntaxError(at, {}, "syntax error at offset " + std::to_string(at) + ": " + what);
  };
  while (i < src.size()) {
    char c = src[i];
    if (text::is_space(c)) {
      ++i;
      continue;
    }
    Token t;
    t.offset = i;
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      t.kind = TokenKind::identifier;
      t.text = std::string(src.substr(i, j - i));
      i = j;
    } else if (text::is_digit(c) || (c == '.' && i + 1 < src.size() && text::is_digit(src[i + 1]))) {
      std::size_t j = i;
      while (j < src.size() && text::is_digit(src[j])) ++j;
      if (j < src.size() && src[j] == '.') {
        ++j;
        while (j < src.size() && text::is_digit(src[j])) ++j;
      }
      t.kind = TokenKind::number;
      t.text = std::string(src.substr(i, j - i));
      i = j;
    } else if (c == '\'' || c == '"' || c == '`' || c == '[') {
      char close = c == '[' ? ']' : c;
      std::string body;
      std::size_t j = i + 1;
      bool closed = false;
      while (j < src.size()) {
        if (src[j] == close) {
          if (close != ']' && j + 1 < src.size() && src[j + 1] == close) {
            body.push_back(close);
            j += 2;
            continue;
          }
          closed = true;
          ++j;
          break;
        }
        body.push_back(src[j++]);
      }
      if (!closed) fail(i, "unterminated quoted text");
      t.kind = c == '\'' ? TokenKind::string : TokenKind::quoted_identifier;
      t.text = std::move(body);
      i = j;
    } else {
      static constexpr std::string_view two[] = {"<=", ">=", "!=", "<>", "=="};
      t.kind = TokenKind::symbol;
      std::string_view rest = src.substr(i);
      bool matched = false;
      for (auto sym : two) {
        if (rest.starts_with(sym)) {
          t.text = std::string(sym);
          i += 2;
          matched = true;
          break;
        }
      }
      if (!matched) {
        static constexpr std::string_view one = "(),*+-/=<>;.";
        if (one.find(c) == std::string_view::npos) fail(i, std::string("unexpected character '") + c + "'");
        t.text = std::string(1, c);
        ++i;
      }
    }
    t.end = i;
    out.push_back(std::move(t));
  }
  Token eof;
  eof.kind = TokenKind::end;
  eof.offset = eof.end = src.size();
  out.push_back(eof);
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src), tokens_(tokenize(src)) {}

  QueryAst parse() {
    QueryAst q;
    expect_keyword("select");
    if (accept_keyword("distinct")) q.distinct = true;
    q.select.push_back(parse_select_item());
    while (accept_symbol(",")) q.select.push_back(parse_select_item());

    expect_keyword("from");
    q.table = parse_name("table name");

    if (accept_keyword("where")) q.where = parse_expr();
    if (accept_keyword("group")) {
      expect_keyword("by");
      q.group_by.push_back(parse_expr());
      while (accept_symbol(",")) q.group_by.push_back(parse_expr());
    }
    if (accept_keyword("order")) {
      expect_keyword("by");
      do {
        OrderItem item;
        item.expr = parse_expr();
        if (accept_keyword("desc")) {
          item.descending = true;
        } else {
          accept_keyword("asc");
        }
        q.order_by.push_back(std::move(item));
      } while (accept_symbol(","));
    }
    if (accept_keyword("limit")) {
      std::int64_t first = parse_integer();
      if (accept_symbol(",")) {
        q.offset = first;
        q.limit = parse_integer();
      } else {
        q.limit = first;
        if (accept_keyword("offset")) q.offset = parse_integer();
      }
    }
    accept_symbol(";");
    if (peek().kind != TokenKind::end) {
      fail({"end of statement", "WHERE", "GROUP BY", "ORDER BY", "LIMIT"});
    }
    return q;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& advance() { return tokens_[pos_++]; }

  bool is_keyword(const Token& t, std::string_view kw) const {
    return t.kind == TokenKind::identifier && text::iequals(t.text, kw);
  }
  bool is_symbol(const Token& t, std::string_view sym) const {
    return t.kind == TokenKind::symbol && t.text == sym;
  }

  bool accept_keyword(std::string_view kw) {
    if (is_keyword(peek(), kw)) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool accept_symbol(std::string_view sym) {
    if (is_symbol(peek(), sym)) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) fail({text::ascii_upper(kw)});
  }
  void expect_symbol(std::string_view sym) {
    if (!accept_symbol(sym)) fail({"'" + std::string(sym) + "'"});
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    const Token& t = peek();
    std::string found = t.kind == TokenKind::end ? "end of input" : "'" + t.text + "'";
    std::string msg = "syntax error at offset " + std::to_string(t.offset) + ": found " + found +
                      ", expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i > 0) msg += " | ";
      msg += expected[i];
    }
    throw QuerySyntaxError(t.offset, std::move(expected), msg);
  }

  std::string parse_name(const char* what) {
    const Token& t = peek();
    if ((t.kind == TokenKind::identifier && !is_reserved(t.text)) ||
        t.kind == TokenKind::quoted_identifier) {
      ++pos_;
      return t.text;
    }
    fail({what});
  }

  std::int64_t parse_integer() {
    const Token& t = peek();
    std::int64_t v = 0;
    if (t.kind == TokenKind::number) {
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec == std::errc{} && ptr == t.text.data() + t.text.size()) {
        ++pos_;
        return v;
      }
    }
    fail({"integer"});
  }

  SelectItem parse_select_item() {
    SelectItem item;
    if (accept_symbol("*")) {
      item.star = true;
      item.source_text = "*";
      return item;
    }
    // w.* is the same as *
    if (peek().kind == TokenKind::identifier && is_symbol(peek(1), ".") && is_symbol(peek(2), "*")) {
      pos_ += 3;
      item.star = true;
      item.source_text = "*";
      return item;
    }
    std::size_t start = peek().offset;
    item.expr = parse_expr();
    std::size_t end = tokens_[pos_ - 1].end;
    item.source_text = std::string(text::trim(src_.substr(start, end - start)));
    if (accept_keyword("as")) {
      const Token& t = peek();
      if (t.kind == TokenKind::identifier || t.kind == TokenKind::quoted_identifier ||
          t.kind == TokenKind::string) {
        item.alias = t.text;
        ++pos_;
      } else {
        fail({"alias"});
      }
    } else if ((peek().kind == TokenKind::identifier && !is_reserved(peek().text)) ||
               peek().kind == TokenKind::quoted_identifier) {
      item.alias = advance().text;
    }
    return item;
  }

  Expr parse_expr() { return parse_or(); }

  Expr binary(ExprKind kind, BinaryOp op, Expr lhs, Expr rhs, std::size_t offset) {
    Expr e;
    e.kind = kind;
    e.op = op;
    e.offset = offset;
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    return e;
  }

  Expr parse_or() {
    Expr lhs = parse_and();
    while (is_keyword(peek(), "or")) {
      std::size_t at = advance().offset;
      lhs = binary(ExprKind::logical_or, BinaryOp::eq, std::move(lhs), parse_and(), at);
    }
    return lhs;
  }

  Expr parse_and() {
    Expr lhs = parse_not();
    while (is_keyword(peek(), "and")) {
      std::size_t at = advance().offset;
      lhs = binary(ExprKind::logical_and, BinaryOp::eq, std::move(lhs), parse_not(), at);
    }
    return lhs;
  }

  Expr parse_not() {
    if (is_keyword(peek(), "not")) {
      Expr e;
      e.kind = ExprKind::logical_not;
      e.offset = advance().offset;
      e.args.push_back(parse_not());
      return e;
    }
    return parse_predicate();
  }

  Expr parse_predicate() {
    Expr subject = parse_additive();
    const Token& t = peek();
    if (t.kind == TokenKind::symbol) {
      static const std::pair<std::string_view, BinaryOp> ops[] = {
          {"=", BinaryOp::eq},  {"==", BinaryOp::eq}, {"!=", BinaryOp::ne}, {"<>", BinaryOp::ne},
          {"<", BinaryOp::lt},  {"<=", BinaryOp::le}, {">", BinaryOp::gt},  {">=", BinaryOp::ge}};
      for (const auto& [sym, op] : ops) {
        if (t.text == sym) {
          std::size_t at = advance().offset;
          return binary(ExprKind::comparison, op, std::move(subject), parse_additive(), at);
        }
      }
      return subject;
    }
    if (t.kind != TokenKind::identifier) return subject;

    std::size_t at = t.offset;
    bool negated = false;
    if (is_keyword(t, "not") &&
        (is_keyword(peek(1), "like") || is_keyword(peek(1), "in") || is_keyword(peek(1), "between"))) {
      negated = true;
      ++pos_;
    }
    Expr e;
    e.offset = at;
    e.negated = negated;
    e.args.push_back(std::move(subject));
    if (accept_keyword("like")) {
      e.kind = ExprKind::like;
      e.args.push_back(parse_additive());
      return e;
    }
    if (accept_keyword("in")) {
      e.kind = ExprKind::in_list;
      expect_symbol("(");
      e.args.push_back(parse_expr());
      while (accept_symbol(",")) e.args.push_back(parse_expr());
      expect_symbol(")");
      return e;
    }
    if (accept_keyword("between")) {
      e.kind = ExprKind::between;
      e.args.push_back(parse_additive());
      expect_keyword("and");
      e.args.push_back(parse_additive());
      return e;
    }
    if (!negated && accept_keyword("is")) {
      e.kind = ExprKind::is_null;
      e.negated = accept_keyword("not");
      expect_keyword("null");
      return e;
    }
    return std::move(e.args.front());
  }

  Expr parse_additive() {
    Expr lhs = parse_multiplicative();
    while (is_symbol(peek(), "+") || is_symbol(peek(), "-")) {
      const Token& t = advance();
      BinaryOp op = t.text == "+" ? BinaryOp::add : BinaryOp::sub;
      lhs = binary(ExprKind::arithmetic, op, std::move(lhs), parse_multiplicative(), t.offset);
    }
    return lhs;
  }

  Expr parse_multiplicative() {
    Expr lhs = parse_unary();
    while (is_symbol(peek(), "*") || is_symbol(peek(), "/")) {
      const Token& t = advance();
      BinaryOp op = t.text == "*" ? BinaryOp::mul : BinaryOp::div;
      lhs = binary(ExprKind::arithmetic, op, std::move(lhs), parse_unary(), t.offset);
    }
    return lhs;
  }

  Expr parse_unary() {
    if (is_symbol(peek(), "-")) {
      Expr e;
      e.kind = ExprKind::negate;
      e.offset = advance().offset;
      e.args.push_back(parse_unary());
      return e;
    }
    if (accept_symbol("+")) return parse_unary();
    return parse_primary();
  }

  static std::optional<AggregateFn> aggregate_named(std::string_view name) {
    std::string lower = text::ascii_lower(name);
    if (lower == "count") return AggregateFn::count;
    if (lower == "sum") return AggregateFn::sum;
    if (lower == "min") return AggregateFn::min;
    if (lower == "max") return AggregateFn::max;
    if (lower == "avg") return AggregateFn::avg;
    return std::nullopt;
  }

  Expr parse_primary() {
    const Token& t = peek();
    Expr e;
    e.offset = t.offset;
    switch (t.kind) {
      case TokenKind::number: {
        ++pos_;
        e.kind = ExprKind::literal;
        e.literal = CellValue::from_lexeme(t.text);
        return e;
      }
      case TokenKind::string:
        ++pos_;
        e.kind = ExprKind::literal;
        e.literal = CellValue::text(t.text);
        return e;
      case TokenKind::quoted_identifier:
        ++pos_;
        e.kind = ExprKind::quoted_name;
        e.name = t.text;
        return e;
      case TokenKind::symbol:
        if (t.text == "(") {
          ++pos_;
          Expr inner = parse_expr();
          expect_symbol(")");
          return inner;
        }
        break;
      case TokenKind::identifier: {
        if (is_keyword(t, "null")) {
          ++pos_;
          e.kind = ExprKind::literal;
          return e;
        }
        if (auto fn = aggregate_named(t.text); fn && is_symbol(peek(1), "(")) {
          pos_ += 2;
          e.kind = ExprKind::aggregate;
          e.fn = *fn;
          if (accept_keyword("distinct")) e.distinct = true;
          if (is_symbol(peek(), "*")) {
            if (*fn != AggregateFn::count || e.distinct) fail({"expression"});
            ++pos_;
          } else {
            e.args.push_back(parse_expr());
          }
          expect_symbol(")");
          return e;
        }
        if (is_reserved(t.text)) break;
        ++pos_;
        e.kind = ExprKind::column;
        e.name = t.text;
        // Qualified name w.col
        if (is_symbol(peek(), ".") &&
            (peek(1).kind == TokenKind::identifier || peek(1).kind == TokenKind::quoted_identifier)) {
          pos_ += 1;
          const Token& col = advance();
          e.kind = col.kind == TokenKind::identifier ? ExprKind::column : ExprKind::quoted_name;
          e.name = col.text;
        }
        return e;
      }
      case TokenKind::end:
        break;
    }
    fail({"expression"});
  }

  std::string_view src_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

QueryAst parse_query(std::string_view text) { return Parser(text).parse(); }

}  // namespace tabsense
