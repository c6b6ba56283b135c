// Copyright 2026 The SDoH Workbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SDOH_ERROR_HPP_
#define SDOH_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdoh {

/// Bad input data or arguments. The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Remote backend unreachable or exhausted retries. CLI exit code 2.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TaxonomyError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LabelParseError : public ValidationError {
 public:
  explicit LabelParseError(std::string raw_token)
      : ValidationError("unmapped label token '" + raw_token + "'"), raw_token_(std::move(raw_token)) {}
  const std::string& raw_token() const { return raw_token_; }

 private:
  std::string raw_token_;
};

/// One problem found in an input file. line is 1-based; 0 means "whole file".
struct Diagnostic {
  std::size_t line = 0;
  std::string message;
};

std::string format_diagnostics(const std::vector<Diagnostic>& diags, const std::string& source);

}  // namespace sdoh

#endif  // SDOH_ERROR_HPP_
