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

#include <gtest/gtest.h>

#include <set>

#include "query_oracle.hpp"

namespace tabsense {
namespace {

TEST(QueryOracle, RandomQueriesAgreeWithBruteForce) {
  auto stats = oracle::run_oracle_suite(1500, 20260101);
  EXPECT_EQ(stats.cases, 1500);
  for (std::size_t i = 0; i < stats.failures.size() && i < 10; ++i) ADD_FAILURE() << stats.failures[i];
  EXPECT_EQ(stats.mismatches, 0);
}

TEST(QueryOracle, BruteForceAgreesOnGoldenQueries) {
  TableSource s;
  s.header = {"k", "v"};
  s.rows = {{"a", "1"}, {"b", "2"}, {"a", "3"}, {"", "4"}};
  Table t = load_table(s);
  auto run = [&](const char* q) { return oracle::BruteForce(t).run(parse_query(q)); };
  using Rows = std::vector<std::vector<std::string>>;
  EXPECT_EQ(run("SELECT SUM(v) FROM w"), (Rows{{"10"}}));
  EXPECT_EQ(run("SELECT k, COUNT(*) FROM w GROUP BY k"), (Rows{{"a", "2"}, {"b", "1"}, {"", "1"}}));
  EXPECT_EQ(run("SELECT v FROM w WHERE k LIKE 'A' ORDER BY v DESC"), (Rows{{"3"}, {"1"}}));
}

std::set<std::int64_t> matching_ids(const Table& t, const std::string& where) {
  std::set<std::int64_t> ids;
  for (const auto& row : execute(parse_query("SELECT row_id FROM w WHERE " + where), t).rows) {
    ids.insert(static_cast<std::int64_t>(*row.values[0].number_value()));
  }
  return ids;
}

// Adding a conjunct never admits rows; adding a disjunct never removes them.
TEST(QueryProperty, FiltersAreMonotone) {
  std::mt19937_64 rng(4242);
  int checked = 0;
  for (int i = 0; i < 800; ++i) {
    Table t = oracle::random_table(rng);
    oracle::QueryGenerator gen(t, rng);
    std::string p = gen.where_condition(), q = gen.where_condition();
    auto sp = matching_ids(t, p), sq = matching_ids(t, q);
    auto both = matching_ids(t, "(" + p + ") AND (" + q + ")");
    auto either = matching_ids(t, "(" + p + ") OR (" + q + ")");
    for (auto id : both) {
      ASSERT_TRUE(sp.count(id) && sq.count(id)) << p << " AND " << q;
    }
    for (auto id : sp) ASSERT_TRUE(either.count(id)) << p << " OR " << q;
    for (auto id : sq) ASSERT_TRUE(either.count(id)) << p << " OR " << q;
    ++checked;
  }
  EXPECT_EQ(checked, 800);
}

}  // namespace
}  // namespace tabsense
