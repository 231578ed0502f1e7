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

#include <string>

#include "tabsense/table.hpp"

namespace tabsense::testing {

// Squad scoring table. Rows 1, 4 and 8 are the sample rows of the encoding
// listings; the others are filler so the filtered view keeps non-contiguous ids.
inline TableSource exeter_source() {
  TableSource s;
  s.caption = "2012–13 Exeter City F.C. season";
  s.header = {"Name", "League", "Total"};
  s.rows = {
      {"danny coles", "3", "3"},     {"scot bennett", "5", "5"},
      {"alan gow", "1", "1"},        {"john o'flynn", "11", "12"},
      {"arron davies", "2", "2"},    {"tommy doherty", "0", "1"},
      {"jake gosling", "1", "1"},    {"jamie cureton", "20", "20"},
  };
  return s;
}

inline Table exeter_sample() {
  return filter_rows(load_table(exeter_source()), RowIdSet{{1, 4, 8}});
}

// The same three rows loaded fresh, numbered 1..3.
inline Table exeter_three_rows() {
  TableSource s = exeter_source();
  s.rows = {s.rows[0], s.rows[3], s.rows[7]};
  return load_table(s);
}

inline const char* kExeterSqlListing =
    "CREATE TABLE 2012–13 Exeter City F.C. season(\n"
    "\trow_id int,\n"
    "\tname text,\n"
    "\tleague int,\n"
    "\ttotal int)\n"
    "/\n"
    "All rows of the table:\n"
    "SELECT * FROM w;\n"
    "row_id\tname\tleague\ttotal\n"
    "1\tdanny coles\t3\t3\n"
    "4\tjohn o'flynn\t11\t12\n"
    "8\tjamie cureton\t20\t20\n"
    "/\n"
    "columns: ['name', 'league', 'total']";

inline const char* kExeterPipeListing =
    "table caption: 2012–13 Exeter City F.C. season\n"
    "/\n"
    "col : name | league | total\n"
    "row 1: danny coles | 3 | 3\n"
    "row 4: john o'flynn | 11 | 12\n"
    "row 8: jamie cureton | 20 | 20\n"
    "*/\n"
    "columns: ['name', 'league', 'total']";

// Club season history, 1936 through 1953. Only 1953 is a cup win, and the
// 1936 season is the reference year of the question about it.
inline TableSource americans_source() {
  TableSource s;
  s.caption = "New York Americans (soccer)";
  s.header = {"Year", "Division", "League", "Reg. Season", "Playoffs", "National Cup"};
  const char* cup[] = {"final",         "did not enter", "2nd round",     "1st round",
                       "did not enter", "quarterfinals", "did not enter", "semifinals",
                       "1st round",     "did not enter", "2nd round",     "did not enter",
                       "quarterfinals", "1st round",     "did not enter", "semifinals",
                       "2nd round",     "champion"};
  const char* season[] = {"1st", "3rd", "2nd", "4th", "5th", "2nd", "1st", "3rd", "6th",
                          "4th", "2nd", "3rd", "5th", "1st", "2nd", "4th", "3rd", "1st"};
  for (int i = 0; i < 18; ++i) {
    s.rows.push_back({std::to_string(1936 + i), "1", "ASL", season[i],
                      (i % 3 == 0) ? "semifinals" : "no playoff", cup[i]});
  }
  return s;
}

inline const char* kAmericansQuestion =
    "How long did it take the New York Americans to win the National Cup after 1936?";

// Completions for the golden question above: SQL picks year, the text view
// adds national cup, SQL finds the 1953 row, the text view adds the 1936
// row, and the evidence query subtracts the two years.
inline const char* kAmericansScriptJson = R"({
  "How long did it take the New York Americans to win the National Cup after 1936?": {
    "col_sql": ["SQL: SELECT year FROM w WHERE year > 1936"],
    "col_text": ["The question needs the season and the cup result.\ncolumns: ['year', 'national cup']"],
    "row_sql": ["SELECT year FROM w WHERE \"national cup\" = 'champion' AND year > 1936"],
    "row_text": ["Row 1 is the 1936 reference season and row 18 is the cup win.\nrows: [1, 18]"],
    "math_classify": ["YES"],
    "reason_sql": ["SELECT MAX(year) - MIN(year) FROM w"],
    "reason_text": ["The cup was won in 1953, 17 years after 1936.\nAnswer: 17"]
  }
})";

}  // namespace tabsense::testing
