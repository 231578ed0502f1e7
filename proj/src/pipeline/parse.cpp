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

#include <charconv>

#include "tabsense/pipeline.hpp"
#include "text_util.hpp"

namespace tabsense {
namespace {

bool word_boundary_after(std::string_view s, std::size_t n) {
  return n >= s.size() || !(text::is_alpha(s[n]) || text::is_digit(s[n]) || s[n] == '_');
}

std::string_view strip_sql_tag(std::string_view line) {
  line = text::trim(line);
  if (text::istarts_with(line, "sql:")) line = text::trim(line.substr(4));
  return line;
}

bool starts_select(std::string_view line) {
  return text::istarts_with(line, "select") && word_boundary_after(line, 6);
}

bool continues_query(std::string_view raw) {
  if (raw.empty()) return false;
  if (raw.front() == ' ' || raw.front() == '\t') return !text::trim(raw).empty();
  static const char* clauses[] = {"from", "where", "group", "order", "limit", "offset", "and", "or", "having", ")"};
  std::string_view t = text::trim(raw);
  for (const char* c : clauses) {
    std::string_view cv(c);
    if (text::istarts_with(t, cv) && (cv == ")" || word_boundary_after(t, cv.size()))) return true;
  }
  return false;
}

// Finds `<key> : [ ... ]` on the last line that carries it and returns the
// text between the brackets.
std::optional<std::string> bracket_payload(std::string_view completion, std::string_view key) {
  auto lines = text::split_lines(completion);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::string_view t = text::trim(*it);
    // Tolerate list markers and emphasis such as "**columns**:".
    while (!t.empty() && (t.front() == '*' || t.front() == '-' || t.front() == '`')) t.remove_prefix(1);
    if (!text::istarts_with(t, key)) continue;
    std::string_view rest = t.substr(key.size());
    while (!rest.empty() && (rest.front() == '*' || rest.front() == ' ')) rest.remove_prefix(1);
    if (rest.empty() || rest.front() != ':') continue;
    rest = text::trim(rest.substr(1));
    auto open = rest.find('[');
    auto close = rest.rfind(']');
    if (open != 0 || close == std::string_view::npos || close < open) continue;
    return std::string(rest.substr(open + 1, close - open - 1));
  }
  return std::nullopt;
}

// Splits a list body into items, honoring single and double quotes with
// backslash escapes.
std::vector<std::string> split_items(std::string_view body) {
  std::vector<std::string> items;
  std::size_t i = 0;
  while (i < body.size()) {
    while (i < body.size() && (text::is_space(body[i]) || body[i] == ',')) ++i;
    if (i >= body.size()) break;
    char q = body[i];
    std::string item;
    if (q == '\'' || q == '"') {
      ++i;
      while (i < body.size() && body[i] != q) {
        if (body[i] == '\\' && i + 1 < body.size()) ++i;
        item.push_back(body[i]);
        ++i;
      }
      ++i;  // closing quote
      while (i < body.size() && body[i] != ',') ++i;
    } else {
      while (i < body.size() && body[i] != ',') item.push_back(body[i++]);
      item = std::string(text::trim(item));
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace

std::optional<std::string> extract_sql(std::string_view completion) {
  if (auto fence = completion.find("```"); fence != std::string_view::npos) {
    auto body_start = completion.find('\n', fence);
    if (body_start != std::string_view::npos) {
      auto end = completion.find("```", body_start + 1);
      std::string_view body =
          completion.substr(body_start + 1, end == std::string_view::npos ? std::string_view::npos : end - body_start - 1);
      std::string_view t = strip_sql_tag(body);
      if (!t.empty()) return std::string(t);
    }
  }
  auto lines = text::split_lines(completion);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view first = strip_sql_tag(lines[i]);
    if (!starts_select(first)) continue;
    std::string query(first);
    for (std::size_t j = i + 1; j < lines.size() && query.back() != ';' && continues_query(lines[j]); ++j) {
      query += '\n';
      query += std::string(text::trim(lines[j]));
    }
    return query;
  }
  return std::nullopt;
}

std::optional<std::vector<std::string>> parse_column_list(std::string_view completion) {
  auto body = bracket_payload(completion, "columns");
  if (!body) return std::nullopt;
  return split_items(*body);
}

std::optional<std::vector<std::int64_t>> parse_row_list(std::string_view completion) {
  auto body = bracket_payload(completion, "rows");
  if (!body) return std::nullopt;
  std::vector<std::int64_t> ids;
  for (const auto& raw : split_items(*body)) {
    std::string_view item = text::trim(raw);
    if (text::istarts_with(item, "row")) item = text::trim(item.substr(3));
    if (!item.empty() && item.front() == '_') item.remove_prefix(1);
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec == std::errc() && p == item.data() + item.size()) ids.push_back(v);
  }
  return ids;
}

std::optional<std::string> parse_answer(std::string_view completion) {
  auto lines = text::split_lines(completion);
  for (std::size_t k = lines.size(); k-- > 0;) {
    std::string_view t = text::trim(lines[k]);
    while (!t.empty() && t.front() == '*') t.remove_prefix(1);
    if (!text::istarts_with(t, "answer")) continue;
    std::string_view rest = t.substr(6);
    while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
    if (rest.empty() || rest.front() != ':') continue;
    rest.remove_prefix(1);
    while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
    std::string out(text::trim(rest));
    for (std::size_t j = k + 1; j < lines.size(); ++j) {
      if (!out.empty()) out += '\n';
      out += lines[j];
    }
    out = std::string(text::trim(out));
    if (out.empty()) return std::nullopt;
    return out;
  }
  return std::nullopt;
}

std::optional<bool> parse_yes_no(std::string_view completion) {
  std::string word;
  auto check = [&]() -> std::optional<bool> {
    if (word == "yes") return true;
    if (word == "no") return false;
    return std::nullopt;
  };
  for (char c : completion) {
    if (text::is_alpha(c)) {
      word.push_back(text::to_lower(c));
      continue;
    }
    if (auto r = check()) return r;
    word.clear();
  }
  return check();
}

std::optional<Label> parse_label(std::string_view answer) {
  std::string first;
  for (char c : text::trim(answer)) {
    if (!text::is_alpha(c)) break;
    first.push_back(text::to_lower(c));
  }
  if (first == "yes" || first == "true" || first == "entailed" || first == "supported") return Label::entailed;
  if (first == "no" || first == "false" || first == "refuted") return Label::refuted;
  return std::nullopt;
}

}  // namespace tabsense
