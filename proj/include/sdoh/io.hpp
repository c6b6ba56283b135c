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

// RFC 4180 CSV and JSON-lines readers/writers, atomic file output and
// SHA-256 digests.

#ifndef SDOH_IO_HPP_
#define SDOH_IO_HPP_

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace sdoh::io {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

struct CsvRecord {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

/// Parses quoted fields (with embedded separators, quotes and newlines).
/// Throws ValidationError on an unterminated quote.
std::vector<CsvRecord> parse_csv(std::string_view data);

/// A CSV file with a header row, addressed by column name.
class CsvTable {
 public:
  static CsvTable parse(std::string_view data);
  static CsvTable load(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }
  std::optional<std::size_t> column(std::string_view name) const;
  bool has_column(std::string_view name) const { return column(name).has_value(); }

  std::size_t line(std::size_t row) const { return rows_[row].line; }
  /// Empty string when the column is absent or the row is short.
  std::string get(std::size_t row, std::string_view name) const;

 private:
  std::vector<std::string> header_;
  std::vector<CsvRecord> rows_;
};

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);
  const std::string& str() const { return out_; }

 private:
  void append(const std::vector<std::string>& fields);
  std::size_t width_;
  std::string out_;
};

std::string csv_escape(std::string_view field);
/// Fixed-precision decimal formatting used in every report.
std::string fmt_fixed(double v, int digits = 4);

struct JsonLine {
  std::size_t line = 0;
  json value;
};

/// Blank lines are skipped. Unparsable lines are reported via `on_error`
/// when supplied and otherwise raise ValidationError.
std::vector<JsonLine> read_jsonl(const std::filesystem::path& path,
                                 const std::function<void(std::size_t, const std::string&)>& on_error = {});
std::vector<JsonLine> parse_jsonl(std::string_view data,
                                  const std::function<void(std::size_t, const std::string&)>& on_error = {});

/// Serializes one object per line with sorted keys (nlohmann's default).
std::string to_jsonl(const std::vector<json>& values);

}  // namespace sdoh::io

#endif  // SDOH_IO_HPP_
