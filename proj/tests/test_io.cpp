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

#include <doctest.h>

#include "helpers.hpp"
#include "sdoh/error.hpp"
#include "sdoh/io.hpp"
#include "sdoh/rng.hpp"
#include "sdoh/text.hpp"

using namespace sdoh;

TEST_SUITE("io") {
  TEST_CASE("text helpers") {
    CHECK(text::trim("  a b \n") == "a b");
    CHECK(text::trim("   ").empty());
    CHECK(text::lower("AbC") == "abc");
    CHECK(text::iequals("Social", "SOCIAL"));
    CHECK_FALSE(text::iequals("Social", "Socia"));
    CHECK(text::split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
    CHECK(text::join({"x", "y"}, "|") == "x|y");
    CHECK(text::replace_all("aaa", "a", "bb") == "bbbbbb");
    CHECK(text::strip_whitespace_and_bullets("\xE2\x80\xA2 a b\n\xE2\x80\xA2 c") == "abc");
  }

  TEST_CASE("csv parsing handles quotes, separators and embedded newlines") {
    auto recs = io::parse_csv("a,b\n\"x, y\",\"he said \"\"hi\"\"\"\n\"multi\nline\",2\n");
    REQUIRE(recs.size() == 3);
    CHECK(recs[1].fields == std::vector<std::string>{"x, y", "he said \"hi\""});
    CHECK(recs[2].fields[0] == "multi\nline");
    CHECK(recs[2].line == 3);
    CHECK_THROWS_AS(io::parse_csv("a\n\"open"), ValidationError);
  }

  TEST_CASE("csv writer round-trips through the parser") {
    io::CsvWriter w({"id", "text"});
    w.row({"1", "plain"});
    w.row({"2", "comma, \"quote\"\nnewline"});
    auto t = io::CsvTable::parse(w.str());
    REQUIRE(t.size() == 2);
    CHECK(t.get(1, "text") == "comma, \"quote\"\nnewline");
    CHECK(t.get(0, "missing").empty());
    CHECK(t.has_column("id"));
  }

  TEST_CASE("sha256 matches the FIPS 180-2 test vector") {
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  }

  TEST_CASE("fixed formatting") {
    CHECK(io::fmt_fixed(0.95698, 4) == "0.9570");
    CHECK(io::fmt_fixed(0.5, 2) == "0.50");
  }

  TEST_CASE("jsonl parsing reports the failing line") {
    std::vector<std::size_t> bad;
    auto rows = io::parse_jsonl("{\"a\":1}\n\nnot json\n{\"b\":2}\n", [&](std::size_t line, const std::string&) {
      bad.push_back(line);
    });
    CHECK(rows.size() == 2);
    CHECK(rows[1].line == 4);
    CHECK(bad == std::vector<std::size_t>{3});
    CHECK_THROWS_AS(io::parse_jsonl("{\n"), ValidationError);
  }

  TEST_CASE("atomic write and read back") {
    testing::TempDir dir;
    io::write_file_atomic(dir / "x.txt", "hello");
    io::write_file_atomic(dir / "x.txt", "world");
    CHECK(io::read_file(dir / "x.txt") == "world");
    CHECK(io::sha256_file(dir / "x.txt") == io::sha256_hex("world"));
    CHECK_THROWS_AS(io::read_file(dir / "absent.txt"), IoError);
  }

  TEST_CASE("rng sequences are reproducible and unbiased enough") {
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i) CHECK(a.below(1000) == b.below(1000));
    Rng r(1);
    std::vector<int> hist(4, 0);
    for (int i = 0; i < 40000; ++i) ++hist[r.below(4)];
    for (int h : hist) CHECK(std::abs(h - 10000) < 500);
    auto idx = Rng(3).sample_indices(10, 4);
    CHECK(idx.size() == 4);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 4);
  }
}
