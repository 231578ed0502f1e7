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

#include "tabsense/metrics.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>

#include "tabsense/table.hpp"
#include "text_util.hpp"

namespace tabsense {
namespace {

std::string nfkc_lower(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  if (U_SUCCESS(status)) {
    icu::UnicodeString n = nfkc->normalize(u, status);
    if (U_SUCCESS(status)) u = n;
  }
  u.toLower(icu::Locale::getRoot());
  std::string out;
  u.toUTF8String(out);
  return out;
}

bool is_quote_at(const std::string& s, std::size_t pos, std::size_t& len) {
  static const char* quotes[] = {"\"", "'", "`", "\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x98", "\xE2\x80\x99"};
  for (const char* q : quotes) {
    std::string_view qv(q);
    if (s.compare(pos, qv.size(), qv) == 0) {
      len = qv.size();
      return true;
    }
  }
  return false;
}

std::string strip_quotes(std::string s) {
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    std::size_t len = 0;
    if (is_quote_at(s, 0, len)) {
      s.erase(0, len);
      changed = true;
    }
    for (std::size_t back : {1u, 3u}) {
      if (s.size() >= back && is_quote_at(s, s.size() - back, len) && len == back) {
        s.erase(s.size() - back);
        changed = true;
        break;
      }
    }
    s = std::string(text::trim(s));
  }
  return s;
}

// Removes commas that sit between a digit and a group of exactly three digits.
std::string strip_thousands(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == ',' && i > 0 && text::is_digit(s[i - 1]) && i + 3 < s.size() && text::is_digit(s[i + 1]) &&
        text::is_digit(s[i + 2]) && text::is_digit(s[i + 3]) && (i + 4 == s.size() || !text::is_digit(s[i + 4]))) {
      continue;
    }
    out.push_back(s[i]);
  }
  return out;
}

std::optional<double> as_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_numeric(s);
}

bool same_normalized(const std::string& a, const std::string& b) {
  if (a == b) return true;
  auto x = as_number(a), y = as_number(b);
  if (!x || !y) return false;
  double scale = std::max(std::fabs(*x), std::fabs(*y));
  return std::fabs(*x - *y) <= 1e-6 * scale;
}

std::vector<std::string> split_parts(std::string_view s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t bar = s.find('|', start);
    parts.push_back(normalize_answer(s.substr(start, bar == std::string_view::npos ? std::string_view::npos : bar - start)));
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return parts;
}

RougeScore from_overlap(double overlap, double pred_total, double gold_total) {
  RougeScore r;
  r.precision = overlap / pred_total;
  r.recall = overlap / gold_total;
  r.f1 = (r.precision + r.recall) > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

}  // namespace

std::string normalize_answer(std::string_view s) {
  std::string out = nfkc_lower(s);
  out = text::collapse_whitespace(text::trim(out));
  // Quotes and a final period can wrap each other: "x". or "x."
  std::string prev;
  while (prev != out) {
    prev = out;
    out = strip_quotes(out);
    if (!out.empty() && out.back() == '.') out.pop_back();
    out = text::collapse_whitespace(text::trim(out));
  }
  return strip_thousands(out);
}

bool exact_match(std::string_view pred, std::string_view gold) {
  if (gold.find('|') == std::string_view::npos) {
    return same_normalized(normalize_answer(pred), normalize_answer(gold));
  }
  auto p = split_parts(pred), g = split_parts(gold);
  auto covered = [](const std::vector<std::string>& xs, const std::vector<std::string>& ys) {
    return std::all_of(xs.begin(), xs.end(), [&](const std::string& x) {
      return std::any_of(ys.begin(), ys.end(), [&](const std::string& y) { return same_normalized(x, y); });
    });
  };
  return covered(p, g) && covered(g, p);
}

std::vector<std::string> rouge_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (u >= 0x80 || text::is_digit(c) || text::is_alpha(c)) {
      cur.push_back(text::to_lower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

RougeScore rouge_n(std::string_view pred, std::string_view gold, int n) {
  if (n < 1) throw std::invalid_argument("rouge_n: n must be positive");
  auto p = rouge_tokens(pred), g = rouge_tokens(gold);
  if (p.empty() && g.empty()) return {1.0, 1.0, 1.0};
  if (p.empty() || g.empty()) return {};
  auto grams = [n](const std::vector<std::string>& toks) {
    std::map<std::vector<std::string>, int> m;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
      ++m[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                   toks.begin() + static_cast<std::ptrdiff_t>(i) + n)];
    }
    return m;
  };
  auto pg = grams(p), gg = grams(g);
  double pt = 0, gt = 0, overlap = 0;
  for (const auto& [k, c] : pg) pt += c;
  for (const auto& [k, c] : gg) {
    gt += c;
    auto it = pg.find(k);
    if (it != pg.end()) overlap += std::min(c, it->second);
  }
  // Both sides too short for any n-gram: equal token sequences score 1.
  if (pt == 0 && gt == 0) return p == g ? RougeScore{1.0, 1.0, 1.0} : RougeScore{};
  if (pt == 0 || gt == 0) return {};
  return from_overlap(overlap, pt, gt);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l(std::string_view pred, std::string_view gold) {
  auto p = rouge_tokens(pred), g = rouge_tokens(gold);
  if (p.empty() && g.empty()) return {1.0, 1.0, 1.0};
  if (p.empty() || g.empty()) return {};
  return from_overlap(static_cast<double>(lcs_length(p, g)), static_cast<double>(p.size()),
                      static_cast<double>(g.size()));
}

Bucket bucket(std::int64_t token_count, const BucketThresholds& th) {
  if (token_count < th.small_below) return Bucket::small;
  if (token_count <= th.medium_upto) return Bucket::medium;
  return Bucket::large;
}

const char* bucket_name(Bucket b) {
  switch (b) {
    case Bucket::small: return "small";
    case Bucket::medium: return "medium";
    case Bucket::large: return "large";
  }
  return "small";
}

}  // namespace tabsense
