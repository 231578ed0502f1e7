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
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tabsense/error.hpp"
#include "tabsense/eval.hpp"

namespace tabsense {

using nlohmann::json;

double tabfact_accuracy(const std::vector<RecordSummary>& records) {
  std::size_t n = 0, hit = 0;
  for (const auto& r : records) {
    if (r.task != TaskKind::fact_verification) continue;
    ++n;
    if (r.correct.value_or(false)) ++hit;
  }
  if (n == 0) throw DatasetError("no records");
  return static_cast<double>(hit) / static_cast<double>(n);
}

CellStats cell_reduction_stats(const std::vector<RecordSummary>& records) {
  CellStats s;
  if (records.empty()) return s;
  for (const auto& r : records) {
    s.avg_t += static_cast<double>(r.cells_t);
    s.avg_tc += static_cast<double>(r.cells_tc);
    s.avg_tcr += static_cast<double>(r.cells_tcr);
  }
  auto n = static_cast<double>(records.size());
  s.avg_t /= n;
  s.avg_tc /= n;
  s.avg_tcr /= n;
  return s;
}

namespace {

struct Mean {
  double sum = 0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  json value() const { return n ? json(sum / static_cast<double>(n)) : json(nullptr); }
  std::string text() const {
    if (!n) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", sum / static_cast<double>(n));
    return buf;
  }
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

std::string lpad(std::string s, std::size_t w) {
  if (s.size() < w) s.insert(0, w - s.size(), ' ');
  return s;
}

const char* kConventions[] = {
    "fact verification: accuracy of entailed/refuted labels; abstentions count as wrong",
    "short QA: exact match after NFKC, lowercasing, quote/period stripping and numeric tolerance 1e-6; "
    "'|' in the gold answer means set equality",
    "long QA: ROUGE-1/2/L F1 on lowercased alphanumeric tokens, averaged over examples",
    "generation budget: samples drawn across extraction and reasoning, excluding the math classifier",
    "table size: token estimate of the full table's PIPE encoding",
};

}  // namespace

RunReport compute_report(const std::vector<RecordSummary>& records, bool interrupted) {
  std::size_t errored = 0, abstained = 0, evidence_used = 0;
  Mean fv, sqa, r1, r2, rl;
  Mean bucket_acc[3], bucket_rouge[3];
  std::size_t bucket_n[3] = {0, 0, 0};
  std::map<int, std::size_t> budget_hist;
  std::int64_t classify_total = 0;
  std::map<std::string, std::map<std::string, std::size_t>> failures;

  for (const auto& r : records) {
    if (r.errored) ++errored;
    if (r.abstained) ++abstained;
    if (r.evidence_used) ++evidence_used;
    auto b = static_cast<std::size_t>(r.bucket);
    ++bucket_n[b];
    if (r.task == TaskKind::fact_verification) fv.add(r.correct.value_or(false) ? 1.0 : 0.0);
    if (r.task == TaskKind::short_qa) sqa.add(r.correct.value_or(false) ? 1.0 : 0.0);
    if (r.task == TaskKind::long_qa) {
      r1.add(r.rouge1 ? r.rouge1->f1 : 0.0);
      r2.add(r.rouge2 ? r.rouge2->f1 : 0.0);
      rl.add(r.rougeL ? r.rougeL->f1 : 0.0);
      bucket_rouge[b].add(r.rougeL ? r.rougeL->f1 : 0.0);
    } else {
      bucket_acc[b].add(r.correct.value_or(false) ? 1.0 : 0.0);
    }
    ++budget_hist[r.generation_budget];
    classify_total += r.classify_samples;
    for (const auto& [stage, outcome] : r.stage_outcomes) {
      if (outcome != "ok" && outcome != "skipped") ++failures[stage][outcome];
    }
  }
  CellStats cells = cell_reduction_stats(records);

  RunReport rep;
  json& j = rep.json;
  j["examples"] = records.size();
  j["errored"] = errored;
  j["abstained"] = abstained;
  j["evidence_used"] = evidence_used;
  j["interrupted"] = interrupted;
  j["metrics"] = {{"fact_verification", {{"n", fv.n}, {"accuracy", fv.value()}}},
                  {"short_qa", {{"n", sqa.n}, {"exact_match", sqa.value()}}},
                  {"long_qa", {{"n", r1.n}, {"rouge1_f1", r1.value()}, {"rouge2_f1", r2.value()},
                               {"rougeL_f1", rl.value()}}}};
  j["cells"] = {{"avg_t", cells.avg_t}, {"avg_tc", cells.avg_tc}, {"avg_tcr", cells.avg_tcr}};
  json buckets = json::array();
  for (std::size_t b = 0; b < 3; ++b) {
    buckets.push_back({{"bucket", bucket_name(static_cast<Bucket>(b))},
                       {"n", bucket_n[b]},
                       {"accuracy", bucket_acc[b].value()},
                       {"rougeL_f1", bucket_rouge[b].value()}});
  }
  j["buckets"] = buckets;
  json hist = json::object();
  for (const auto& [k, v] : budget_hist) hist[std::to_string(k)] = v;
  j["generation_budget"] = hist;
  j["classify_samples"] = classify_total;
  j["stage_failures"] = failures;
  j["conventions"] = kConventions;

  std::ostringstream t;
  t << "examples: " << records.size() << " (errored " << errored << ", abstained " << abstained
    << ", with SQL evidence " << evidence_used << ")" << (interrupted ? " [interrupted, partial]" : "") << "\n\n";
  t << "metrics\n";
  t << "  fact verification accuracy  " << fv.text() << "  (n=" << fv.n << ")\n";
  t << "  short QA exact match        " << sqa.text() << "  (n=" << sqa.n << ")\n";
  t << "  long QA ROUGE-1/2/L F1      " << r1.text() << " / " << r2.text() << " / " << rl.text() << "  (n=" << r1.n
    << ")\n\n";

  t << "cells per table (mean)\n";
  t << "  " << pad("table", 8) << lpad("cells", 10) << lpad("of T", 9) << "\n";
  auto share = [&](double v) { return cells.avg_t > 0 ? fixed(100.0 * v / cells.avg_t, 1) + "%" : std::string("-"); };
  t << "  " << pad("T", 8) << lpad(fixed(cells.avg_t, 1), 10) << lpad(share(cells.avg_t), 9) << "\n";
  t << "  " << pad("T_C", 8) << lpad(fixed(cells.avg_tc, 1), 10) << lpad(share(cells.avg_tc), 9) << "\n";
  t << "  " << pad("T_CR", 8) << lpad(fixed(cells.avg_tcr, 1), 10) << lpad(share(cells.avg_tcr), 9) << "\n\n";

  t << "by table size\n";
  t << "  " << pad("bucket", 8) << lpad("n", 6) << lpad("accuracy", 10) << lpad("ROUGE-L", 10) << "\n";
  for (std::size_t b = 0; b < 3; ++b) {
    t << "  " << pad(bucket_name(static_cast<Bucket>(b)), 8) << lpad(std::to_string(bucket_n[b]), 6)
      << lpad(bucket_acc[b].text(), 10) << lpad(bucket_rouge[b].text(), 10) << "\n";
  }
  t << "\ngeneration budget\n";
  t << "  " << pad("samples", 9) << lpad("examples", 9) << "\n";
  for (const auto& [k, v] : budget_hist) t << "  " << pad(std::to_string(k), 9) << lpad(std::to_string(v), 9) << "\n";
  t << "  classifier samples (not in budget): " << classify_total << "\n\n";

  t << "stage failures\n";
  if (failures.empty()) t << "  none\n";
  for (const auto& [stage, outcomes] : failures) {
    for (const auto& [outcome, n] : outcomes) t << "  " << pad(stage, 14) << pad(outcome, 16) << n << "\n";
  }
  t << "\nconventions\n";
  for (const char* c : kConventions) t << "  " << c << "\n";
  rep.text = t.str();
  return rep;
}

std::vector<RecordSummary> load_trace_summaries(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::path d = fs::is_directory(dir / "traces") ? dir / "traces" : dir;
  if (!fs::is_directory(d)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(d)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  if (files.empty()) throw DatasetError("no trace files in " + d.string());
  std::sort(files.begin(), files.end());
  std::vector<RecordSummary> out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw IoError("cannot read " + f.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw DatasetError("malformed trace " + f.filename().string() + ": " + e.what());
    }
    out.push_back(summary_from_json(j));
  }
  return out;
}

}  // namespace tabsense
