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

// Command-line front end. Talks to the library only through tabsense.h.
#include <CLI11.hpp>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>

#include "tabsense/tabsense.h"

using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kInput = 3, kGateway = 4, kInterrupted = 130 };

int exit_code_for(ts_status s) {
  switch (s) {
    case TS_OK: return kOk;
    case TS_ERR_CONFIG:
    case TS_ERR_INVALID_ARGUMENT: return kUsage;
    case TS_ERR_IO:
    case TS_ERR_DATASET:
    case TS_ERR_STRUCTURAL: return kInput;
    case TS_ERR_GATEWAY: return kGateway;
    default: return kFailure;
  }
}

int report_failure(ts_status s) {
  std::cerr << "tabsense: " << ts_status_name(s) << " error: " << ts_last_error() << "\n";
  return exit_code_for(s);
}

// Owns a string returned by the library.
struct LibString {
  char* p = nullptr;
  ~LibString() { ts_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct Options {
  std::string config_file;
  json flags = json::object();
};

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Config file first, then flags on top.
std::optional<json> effective_config(const Options& o) {
  json c = json::object();
  if (!o.config_file.empty()) {
    auto text = read_file(o.config_file);
    if (!text) {
      std::cerr << "tabsense: cannot read config file " << o.config_file << "\n";
      return std::nullopt;
    }
    try {
      c = json::parse(*text);
    } catch (const json::exception& e) {
      std::cerr << "tabsense: config file " << o.config_file << " is not valid JSON: " << e.what() << "\n";
      return std::nullopt;
    }
    if (!c.is_object()) {
      std::cerr << "tabsense: config file must hold a JSON object\n";
      return std::nullopt;
    }
  }
  for (const auto& [k, v] : o.flags.items()) c[k] = v;
  return c;
}

template <class T>
void flag(CLI::App* app, Options& o, const std::string& names, const char* key, const std::string& help) {
  app->add_option_function<T>(names, [&o, key](const T& v) { o.flags[key] = v; }, help);
}

void add_backend_flags(CLI::App* app, Options& o) {
  app->add_option("-c,--config", o.config_file, "JSON config file; flags override its values");
  flag<std::string>(app, o, "--backend", "backend", "live, record or replay");
  flag<std::string>(app, o, "--fixtures", "fixtures_dir", "fixture directory for record/replay");
  flag<std::string>(app, o, "--endpoint", "endpoint", "chat-completions URL");
  flag<std::string>(app, o, "--model", "model", "model name sent to the endpoint");
  flag<std::string>(app, o, "--api-key-env", "api_key_env", "environment variable holding the API key");
  flag<double>(app, o, "--timeout", "timeout_s", "per-request timeout in seconds");
  flag<int>(app, o, "--max-attempts", "max_attempts", "attempts per request");
  flag<int>(app, o, "--max-in-flight", "max_in_flight", "concurrent requests");
  flag<std::string>(app, o, "--profile", "profile", "gpt35, palm2 or a full profile name");
  flag<std::string>(app, o, "--extraction-mode", "extraction_mode", "full, no_column, no_row or none");
  flag<std::string>(app, o, "--mode,--reasoning-mode", "reasoning_mode", "adaptive, text_only or sql_only");
  flag<std::int64_t>(app, o, "--sql-token-budget", "sql_token_budget", "token budget of SQL-schema prompts");
  flag<std::string>(app, o, "--prompt-dir", "prompt_dir", "prompt template directory");
}

std::atomic<int> g_interrupts{0};  // lock-free, so usable from the handler

void on_signal(int) {
  if (g_interrupts.fetch_add(1) > 0) _exit(kInterrupted);
  ts_run_cancel();
  static const char msg[] = "\ntabsense: draining in-flight examples; interrupt again to abort\n";
  (void)!write(2, msg, sizeof msg - 1);
}

int cmd_run(const Options& o) {
  auto cfg = effective_config(o);
  if (!cfg) return kUsage;
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);

  LibString out;
  ts_status s = ts_run(cfg->dump().c_str(), &out.p);
  if (s != TS_OK) return report_failure(s);
  json res = json::parse(out.str());
  std::cout << res["text"].get<std::string>();
  std::cerr << "tabsense: " << res["examples"] << " examples, " << res["rejects"] << " rejected lines; output in "
            << res["output_dir"].get<std::string>() << "\n";
  if (res["interrupted"].get<bool>()) {
    std::cerr << "tabsense: run interrupted; the report covers finished examples only\n";
    return kInterrupted;
  }
  return kOk;
}

struct AskArgs {
  std::string table_file, question, task, gold, trace_file;
  bool verbose = false, as_json = false;
};

std::string py_list(const json& items) {
  std::string s = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) s += ", ";
    s += items[i].is_string() ? "'" + items[i].get<std::string>() + "'" : items[i].dump();
  }
  return s + "]";
}

int cmd_ask(const Options& o, const AskArgs& a) {
  auto cfg = effective_config(o);
  if (!cfg) return kUsage;
  auto text = read_file(a.table_file);
  if (!text) {
    std::cerr << "tabsense: cannot read table file " << a.table_file << "\n";
    return kInput;
  }
  json req = json::object();
  try {
    json t = json::parse(*text);
    // A dataset line carries its own question, task and gold.
    if (t.is_object() && t.contains("table") && t.contains("question")) {
      req = t;
    } else {
      req["table"] = t;
    }
  } catch (const json::exception& e) {
    std::cerr << "tabsense: structural error: malformed table JSON in " << a.table_file << ": " << e.what() << "\n";
    return kInput;
  }
  if (!a.question.empty()) req["question"] = a.question;
  if (!a.task.empty()) req["task"] = a.task;
  if (!a.gold.empty()) req["gold"] = a.gold;
  if (!req.contains("question")) {
    std::cerr << "tabsense: --question is required\n";
    return kUsage;
  }

  ts_session* session = nullptr;
  ts_status s = ts_session_create(cfg->dump().c_str(), &session);
  if (s != TS_OK) return report_failure(s);
  LibString out;
  s = ts_session_ask(session, req.dump().c_str(), &out.p);
  ts_session_free(session);
  if (s != TS_OK) return report_failure(s);

  json res = json::parse(out.str());
  if (!a.trace_file.empty()) {
    std::ofstream f(a.trace_file, std::ios::binary);
    f << res["trace"].dump(2) << "\n";
    if (!f) {
      std::cerr << "tabsense: cannot write trace to " << a.trace_file << "\n";
      return kInput;
    }
  }
  if (a.as_json) {
    std::cout << res.dump(2) << "\n";
    return kOk;
  }
  if (a.verbose) {
    const json& x = res["trace"]["extraction"];
    const json& r = res["trace"]["reasoning"];
    std::cout << "C1: " << py_list(x["c1"]) << "\n";
    std::cout << "C2: " << py_list(x["c2"]) << "\n";
    std::cout << "C': " << py_list(x["c_final"]) << "\n";
    std::cout << "R1: " << py_list(x["r1"]) << "\n";
    std::cout << "R2: " << py_list(x["r2"]) << "\n";
    std::cout << "R': " << py_list(x["r_final"]) << "\n";
    std::cout << "cells T/T_C/T_CR: " << x["cells"]["t"] << "/" << x["cells"]["tc"] << "/" << x["cells"]["tcr"]
              << "\n";
    std::cout << "T_CR:\n" << (res["t_cr"].is_string() ? res["t_cr"].get<std::string>() : "(none)") << "\n";
    std::cout << "math question: "
              << (r["classify_ran"].get<bool>() ? (r["is_math"].get<bool>() ? "yes" : "no") : "not classified")
              << "\n";
    std::cout << "E_v:\n" << (res["evidence"].is_string() ? res["evidence"].get<std::string>() : "(none)") << "\n";
    if (!a.trace_file.empty()) std::cout << "trace: " << a.trace_file << "\n";
    std::cout << "answer: ";
  }
  if (res["abstained"].get<bool>()) {
    std::cout << "(no answer)\n";
  } else if (res["label"].is_string()) {
    std::cout << res["label"].get<std::string>() << "\n";
  } else {
    std::cout << res["answer"].get<std::string>() << "\n";
  }
  return kOk;
}

int cmd_report(const std::string& dir, bool as_json) {
  LibString j, t;
  ts_status s = ts_report(dir.c_str(), &j.p, &t.p);
  if (s != TS_OK) return report_failure(s);
  std::cout << (as_json ? j.str() : t.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Table question answering with SQL and text reasoning"};
  app.set_version_flag("--version", std::string(ts_version()));
  app.require_subcommand(1);

  Options run_opts;
  CLI::App* run = app.add_subcommand("run", "evaluate a dataset and write traces and a report");
  add_backend_flags(run, run_opts);
  flag<std::string>(run, run_opts, "-d,--dataset", "dataset", "JSONL dataset");
  flag<std::string>(run, run_opts, "--format", "format", "neutral, tabfact, wikitq or fetaqa");
  flag<std::string>(run, run_opts, "-o,--output", "output_dir", "output directory");
  flag<int>(run, run_opts, "-j,--workers", "workers", "examples processed concurrently");
  flag<std::uint64_t>(run, run_opts, "--seed", "seed", "seed for the processing order");
  flag<std::size_t>(run, run_opts, "--limit", "limit", "first N examples only");
  flag<std::int64_t>(run, run_opts, "--small-below", "bucket_small_below", "token bound of the small bucket");
  flag<std::int64_t>(run, run_opts, "--medium-upto", "bucket_medium_upto", "token bound of the medium bucket");

  Options ask_opts;
  AskArgs ask_args;
  CLI::App* ask = app.add_subcommand("ask", "answer one question about one table");
  add_backend_flags(ask, ask_opts);
  ask->add_option("-t,--table", ask_args.table_file, "table JSON {caption, header, rows}, or one dataset line")
      ->required();
  ask->add_option("-q,--question", ask_args.question, "question or statement");
  ask->add_option("--task", ask_args.task, "short_qa, fact_verification or long_qa");
  ask->add_option("--gold", ask_args.gold, "reference answer to score against");
  ask->add_option("--trace", ask_args.trace_file, "write the trace JSON to this file");
  ask->add_flag("-v,--verbose", ask_args.verbose, "print selections, T_CR and the SQL evidence");
  ask->add_flag("--json", ask_args.as_json, "print the full result as JSON");

  std::string report_dir;
  bool report_json = false;
  CLI::App* report = app.add_subcommand("report", "recompute the report from a run's traces");
  report->add_option("dir", report_dir, "run directory or trace directory")->required();
  report->add_flag("--json", report_json, "print JSON instead of text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  if (*run) return cmd_run(run_opts);
  if (*ask) return cmd_ask(ask_opts, ask_args);
  return cmd_report(report_dir, report_json);
}
