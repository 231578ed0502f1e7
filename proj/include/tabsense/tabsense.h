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

#ifndef TABSENSE_TABSENSE_H
#define TABSENSE_TABSENSE_H

/* C interface to the tabsense library. All strings are UTF-8. Strings
 * returned through `char**` out-parameters are owned by the caller and must
 * be released with ts_string_free. On failure a function returns a non-zero
 * ts_status and ts_last_error() describes the problem; the message belongs
 * to the calling thread and stays valid until its next call into the
 * library. */

#include <stddef.h>

#if defined(_WIN32)
#define TS_API __declspec(dllexport)
#else
#define TS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ts_status {
  TS_OK = 0,
  TS_ERR_STRUCTURAL = 1,
  TS_ERR_SELECTION = 2,
  TS_ERR_QUERY_SYNTAX = 3,
  TS_ERR_QUERY_BIND = 4,
  TS_ERR_CONFIG = 5,
  TS_ERR_GATEWAY = 6,
  TS_ERR_IO = 7,
  TS_ERR_DATASET = 8,
  TS_ERR_INVALID_ARGUMENT = 9,
  TS_ERR_INTERNAL = 10
} ts_status;

typedef struct ts_table ts_table;
typedef struct ts_session ts_session;

TS_API const char* ts_version(void);
TS_API const char* ts_status_name(ts_status status);
TS_API const char* ts_last_error(void);
TS_API void ts_string_free(char* s);

/* ---- tables ---- */

/* {"caption": optional string, "header": [...], "rows": [[...], ...]} */
TS_API ts_status ts_table_from_json(const char* table_json, ts_table** out);
TS_API void ts_table_free(ts_table* table);
TS_API size_t ts_table_cell_count(const ts_table* table);
TS_API ts_status ts_table_encode_pipe(const ts_table* table, char** out);
TS_API ts_status ts_table_encode_sql(const ts_table* table, size_t token_budget, char** out);
/* Runs one SELECT against the table, registered as `w`. The result is
 * {"columns": [...], "rows": [[...]], "source_row_ids": [[...]]}. */
TS_API ts_status ts_table_query(const ts_table* table, const char* sql, char** out_json);

/* ---- sessions ---- */

/* config_json holds run-config keys; the dataset may be omitted. The
 * backend stack is built once and shared by later calls. */
TS_API ts_status ts_session_create(const char* config_json, ts_session** out);
TS_API void ts_session_free(ts_session* session);

/* One question. request_json: {"table": {...}, "question": "...",
 * "task": optional (short_qa), "gold": optional, "id": optional}.
 * The result holds "answer", "trace" and the rendered "t_cr" and
 * "evidence" views. */
TS_API ts_status ts_session_ask(ts_session* session, const char* request_json, char** out_json);

/* ---- batch ---- */

/* Full run; writes the output directory and returns the report as
 * {"report": {...}, "text": "...", "interrupted": bool, "output_dir": "..."}.
 * Clears any earlier cancellation on entry. */
TS_API ts_status ts_run(const char* config_json, char** out_json);

/* Asks running ts_run calls to stop after their in-flight examples. Only
 * stores to a lock-free flag, so it may be called from a signal handler. */
TS_API void ts_run_cancel(void);

/* Recomputes the report from a run directory (or a bare trace directory).
 * Either out-parameter may be NULL. */
TS_API ts_status ts_report(const char* dir, char** out_json, char** out_text);

#ifdef __cplusplus
}
#endif

#endif /* TABSENSE_TABSENSE_H */
