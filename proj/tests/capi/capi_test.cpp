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

// Exercises the shared library through its C header only.
#include <gtest/gtest.h>

#include <string>

#include "tabsense/tabsense.h"

namespace {

const char* kTable = R"({"caption": "demo", "header": ["Name", "Score"],
  "rows": [["ann", "3"], ["bo", "5"], ["cy", "4"]]})";

struct Owned {
  char* p = nullptr;
  ~Owned() { ts_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

TEST(CApi, TableRoundTrip) {
  ts_table* t = nullptr;
  ASSERT_EQ(ts_table_from_json(kTable, &t), TS_OK) << ts_last_error();
  EXPECT_EQ(ts_table_cell_count(t), 6u);
  Owned pipe;
  ASSERT_EQ(ts_table_encode_pipe(t, &pipe.p), TS_OK);
  EXPECT_EQ(pipe.str(),
            "table caption: demo\n/\ncol : name | score\nrow 1: ann | 3\nrow 2: bo | 5\nrow 3: cy | 4\n*/\n"
            "columns: ['name', 'score']");
  Owned sql;
  ASSERT_EQ(ts_table_encode_sql(t, 6000, &sql.p), TS_OK);
  EXPECT_EQ(sql.str().rfind("CREATE TABLE demo(", 0), 0u) << sql.str();
  Owned res;
  ASSERT_EQ(ts_table_query(t, "SELECT name FROM w WHERE score > 3 ORDER BY score DESC", &res.p), TS_OK);
  EXPECT_EQ(res.str(), R"({"columns":["name"],"rows":[["bo"],["cy"]],"source_row_ids":[[2],[3]]})");
  ts_table_free(t);
}

TEST(CApi, ErrorsCarryStatusAndMessage) {
  ts_table* t = nullptr;
  EXPECT_EQ(ts_table_from_json(R"({"header": ["a"], "rows": [["1", "2"]]})", &t), TS_ERR_STRUCTURAL);
  EXPECT_EQ(t, nullptr);
  EXPECT_NE(std::string(ts_last_error()).find("ragged"), std::string::npos);
  EXPECT_EQ(ts_table_from_json("{", &t), TS_ERR_STRUCTURAL);
  EXPECT_EQ(ts_table_from_json(nullptr, &t), TS_ERR_CONFIG);

  ASSERT_EQ(ts_table_from_json(kTable, &t), TS_OK);
  EXPECT_STREQ(ts_last_error(), "");
  Owned out;
  EXPECT_EQ(ts_table_query(t, "SELECT FROM", &out.p), TS_ERR_QUERY_SYNTAX);
  EXPECT_EQ(ts_table_query(t, "SELECT nope FROM w", &out.p), TS_ERR_QUERY_BIND);
  EXPECT_NE(std::string(ts_last_error()).find("nope"), std::string::npos);
  EXPECT_EQ(out.p, nullptr);
  ts_table_free(t);
  ts_table_free(nullptr);
  ts_string_free(nullptr);

  EXPECT_STREQ(ts_status_name(TS_ERR_DATASET), "dataset");
  EXPECT_STREQ(ts_status_name(TS_OK), "ok");
}

TEST(CApi, SessionValidatesConfig) {
  ts_session* s = nullptr;
  EXPECT_EQ(ts_session_create(R"({"backend": "replay", "fixtures_dir": "/definitely/missing"})", &s), TS_ERR_CONFIG);
  EXPECT_EQ(s, nullptr);
  EXPECT_EQ(ts_session_create(R"({"bogus": 1})", &s), TS_ERR_CONFIG);
  EXPECT_EQ(ts_session_create("not json", &s), TS_ERR_INVALID_ARGUMENT);
}

TEST(CApi, RunAndReportErrors) {
  Owned out;
  EXPECT_EQ(ts_run(R"({"dataset": "/missing.jsonl", "backend": "replay", "fixtures_dir": "/"})", &out.p), TS_ERR_IO);
  EXPECT_EQ(ts_report("/definitely/missing", &out.p, nullptr), TS_ERR_IO);
  EXPECT_STRNE(ts_version(), "");
}

}  // namespace
