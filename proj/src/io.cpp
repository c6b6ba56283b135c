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

#include "sdoh/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/format.h>

#include "sdoh/error.hpp"

namespace sdoh::io {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path.string());
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

std::vector<CsvRecord> parse_csv(std::string_view data) {
  std::vector<CsvRecord> records;
  CsvRecord cur;
  std::string field;
  std::size_t line = 1;
  bool in_quotes = false;
  bool field_started = false;
  bool record_started = false;

  auto end_field = [&] {
    cur.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A lone empty field is a blank line.
    if (!(cur.fields.size() == 1 && cur.fields[0].empty())) records.push_back(std::move(cur));
    cur = CsvRecord{};
    record_started = false;
  };

  for (std::size_t i = 0; i < data.size(); ++i) {
    char c = data[i];
    if (!record_started) {
      cur.line = line;
      record_started = true;
    }
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < data.size() && data[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw ValidationError(fmt::format("unterminated quoted CSV field starting near line {}", cur.line));
  if (record_started) end_record();
  return records;
}

CsvTable CsvTable::parse(std::string_view data) {
  CsvTable t;
  auto records = parse_csv(data);
  if (records.empty()) return t;
  t.header_ = records.front().fields;
  for (auto& h : t.header_) {
    // Tolerate a UTF-8 byte order mark on the first column.
    if (h.rfind("\xEF\xBB\xBF", 0) == 0) h.erase(0, 3);
  }
  t.rows_.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  return t;
}

CsvTable CsvTable::load(const fs::path& path) { return parse(read_file(path)); }

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

std::string CsvTable::get(std::size_t row, std::string_view name) const {
  auto col = column(name);
  if (!col) return {};
  const auto& fields = rows_[row].fields;
  return *col < fields.size() ? fields[*col] : std::string{};
}

std::string csv_escape(std::string_view field) {
  bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { append(header); }

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) {
    throw std::logic_error(fmt::format("CSV row has {} fields, header has {}", fields.size(), width_));
  }
  append(fields);
}

void CsvWriter::append(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ += ',';
    out_ += csv_escape(fields[i]);
  }
  out_ += '\n';
}

std::string fmt_fixed(double v, int digits) { return fmt::format("{:.{}f}", v, digits); }

std::vector<JsonLine> parse_jsonl(std::string_view data,
                                  const std::function<void(std::size_t, const std::string&)>& on_error) {
  std::vector<JsonLine> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= data.size()) {
    std::size_t nl = data.find('\n', pos);
    if (nl == std::string_view::npos) nl = data.size();
    std::string_view line = data.substr(pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    bool blank = line.find_first_not_of(" \t\r") == std::string_view::npos;
    if (!blank) {
      try {
        out.push_back({line_no, json::parse(line)});
      } catch (const json::parse_error& e) {
        std::string msg = std::string("invalid JSON: ") + e.what();
        if (on_error) {
          on_error(line_no, msg);
        } else {
          throw ValidationError(fmt::format("line {}: {}", line_no, msg));
        }
      }
    }
    if (nl == data.size()) break;
  }
  return out;
}

std::vector<JsonLine> read_jsonl(const fs::path& path,
                                 const std::function<void(std::size_t, const std::string&)>& on_error) {
  return parse_jsonl(read_file(path), on_error);
}

std::string to_jsonl(const std::vector<json>& values) {
  std::string out;
  for (const auto& v : values) {
    out += v.dump();
    out += '\n';
  }
  return out;
}

}  // namespace sdoh::io
