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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tabsense {

enum class ErrorCode {
  structural = 1,
  selection,
  query_syntax,
  query_bind,
  config,
  gateway,
  io,
  dataset,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Malformed table input (ragged grid, bad JSON shape).
class StructuralError : public Error {
 public:
  explicit StructuralError(const std::string& message)
      : Error(ErrorCode::structural, message) {}
};

// A column or row selection that does not exist in the table.
class SelectionError : public Error {
 public:
  explicit SelectionError(const std::string& message)
      : Error(ErrorCode::selection, message) {}
};

class QuerySyntaxError : public Error {
 public:
  QuerySyntaxError(std::size_t offset, std::vector<std::string> expected,
                   const std::string& message)
      : Error(ErrorCode::query_syntax, message),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

class QueryBindError : public Error {
 public:
  explicit QueryBindError(const std::string& message)
      : Error(ErrorCode::query_bind, message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorCode::config, message) {}
};

// Transport failure that survived the retry policy.
class GatewayError : public Error {
 public:
  explicit GatewayError(const std::string& message)
      : Error(ErrorCode::gateway, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorCode::io, message) {}
};

class DatasetError : public Error {
 public:
  explicit DatasetError(const std::string& message)
      : Error(ErrorCode::dataset, message) {}
};

}  // namespace tabsense
