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

// The `sdoh` command line: pipeline subcommands over a YAML run config.

#ifndef SDOH_CLI_HPP_
#define SDOH_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdoh/corpus.hpp"
#include "sdoh/remote.hpp"

namespace sdoh::cli {

inline constexpr std::uint64_t kDefaultSeed = 20231;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitTransport = 2;

/// Settings shared by every subcommand. Command-line flags override the
/// config file, which overrides these defaults.
struct RunConfig {
  /// Input roles: corpus, sentences, annotations, predictions, zcodes,
  /// synthetic, pairs, splits, courses.
  std::map<std::string, std::filesystem::path> paths;
  /// Optional resource overrides: headers, abbreviations, aliases,
  /// zcode_map, lexicon.
  std::map<std::string, std::filesystem::path> resources;
  FilterPolicy filter;
  int days_before = 30;
  int days_after = 90;
  RemoteBackendConfig remote;
  std::string task = "any";
  std::uint64_t seed = kDefaultSeed;
  std::filesystem::path output = "out";
};

/// Parses the YAML config. Relative paths resolve against the file's
/// directory. Throws ValidationError naming the offending key.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& yaml, const std::filesystem::path& base_dir = ".");

/// Snapshot written into manifests; the API key itself is never included.
nlohmann::json to_json(const RunConfig& config);

/// Runs one subcommand and returns the process exit code. Never throws.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace sdoh::cli

#endif  // SDOH_CLI_HPP_
