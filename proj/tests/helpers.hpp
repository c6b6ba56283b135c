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

#ifndef SDOH_TESTS_HELPERS_HPP_
#define SDOH_TESTS_HELPERS_HPP_

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "sdoh/remote.hpp"
#include "sdoh/text.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sdoh-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Renders a message list the way the golden files store it:
/// { "role": "...", "content": "..." } joined by ", ", newlines as \n.
inline std::string render_messages(const std::vector<sdoh::ChatMessage>& messages) {
  std::string out;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (i) out += ", ";
    out += "{ \"role\": \"" + messages[i].role + "\", \"content\": \"" +
           sdoh::text::replace_all(messages[i].content, "\n", "\\n") + "\" }";
  }
  return out + "\n";
}

inline std::filesystem::path golden(const std::string& name) { return std::filesystem::path(SDOH_GOLDEN_DIR) / name; }
inline std::filesystem::path demo(const std::string& name) { return std::filesystem::path(SDOH_DEMO_DIR) / name; }

}  // namespace testing

#endif  // SDOH_TESTS_HELPERS_HPP_
