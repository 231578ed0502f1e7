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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tabsense {

// NFKC, lowercase, trim, strip surrounding quotes, drop one trailing
// period, collapse whitespace, strip thousands commas inside numbers.
std::string normalize_answer(std::string_view s);

// Normalized equality. Numbers compare with relative tolerance 1e-6; a gold
// containing '|' is a multi-answer and requires set equality of the parts.
bool exact_match(std::string_view pred, std::string_view gold);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Lowercased maximal alphanumeric runs. Bytes >= 0x80 count as alphanumeric
// so non-ASCII words stay whole.
std::vector<std::string> rouge_tokens(std::string_view s);

// F1 with beta = 1 over multiset n-gram overlap, no stemming.
RougeScore rouge_n(std::string_view pred, std::string_view gold, int n);
RougeScore rouge_l(std::string_view pred, std::string_view gold);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

enum class Bucket { small, medium, large };

struct BucketThresholds {
  std::int64_t small_below = 2000;   // small: count < small_below
  std::int64_t medium_upto = 4000;   // medium: small_below <= count <= medium_upto
};

Bucket bucket(std::int64_t token_count, const BucketThresholds& th = {});
const char* bucket_name(Bucket b);

}  // namespace tabsense
