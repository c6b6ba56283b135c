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

#include <set>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "sdoh/cli.hpp"
#include "sdoh/error.hpp"
#include "sdoh/io.hpp"
#include "sdoh/taxonomy.hpp"

namespace sdoh::cli {

namespace {

const std::set<std::string> kPathRoles = {"corpus", "sentences", "annotations", "predictions", "zcodes",
                                          "synthetic", "pairs", "splits", "courses"};
const std::set<std::string> kResourceRoles = {"headers", "abbreviations", "aliases", "zcode_map", "lexicon"};
const std::set<std::string> kTopKeys = {"paths", "resources", "filter", "remote", "task", "seed", "output"};

template <typename T>
T scalar(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ValidationError(fmt::format("config: '{}' has the wrong type (line {})", key, node.Mark().line + 1));
  }
}

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
  if (!map.IsMap()) throw ValidationError(fmt::format("config: '{}' must be a mapping", where));
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      throw ValidationError(fmt::format("config: unknown key '{}{}' (line {})", where.empty() ? "" : where + ".", key,
                                        kv.first.Mark().line + 1));
    }
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

RunConfig parse_config(const std::string& yaml, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    throw ValidationError(fmt::format("config:{}: {}", e.mark.line + 1, e.msg));
  }
  RunConfig cfg;
  if (root.IsNull()) return cfg;
  check_keys(root, kTopKeys, "");

  for (const auto& [section, roles, target] :
       {std::tuple{"paths", &kPathRoles, &cfg.paths}, std::tuple{"resources", &kResourceRoles, &cfg.resources}}) {
    if (auto node = root[section]) {
      check_keys(node, *roles, section);
      for (const auto& kv : node) {
        (*target)[kv.first.as<std::string>()] =
            resolve(base_dir, scalar<std::string>(kv.second, std::string(section) + "." + kv.first.as<std::string>()));
      }
    }
  }

  if (auto f = root["filter"]) {
    check_keys(f, {"min_tokens", "max_section_tokens", "exempt_roles", "days_before", "days_after"}, "filter");
    if (f["min_tokens"]) cfg.filter.min_tokens = scalar<std::size_t>(f["min_tokens"], "filter.min_tokens");
    if (f["max_section_tokens"]) {
      cfg.filter.max_section_tokens = scalar<std::size_t>(f["max_section_tokens"], "filter.max_section_tokens");
    }
    if (f["exempt_roles"]) {
      cfg.filter.section_cap_exempt_roles.clear();
      for (const auto& r : f["exempt_roles"]) {
        auto name = scalar<std::string>(r, "filter.exempt_roles");
        auto role = parse_author_role(name);
        if (!role) throw ValidationError(fmt::format("config: unknown author role '{}' in filter.exempt_roles", name));
        cfg.filter.section_cap_exempt_roles.insert(*role);
      }
    }
    if (f["days_before"]) cfg.days_before = scalar<int>(f["days_before"], "filter.days_before");
    if (f["days_after"]) cfg.days_after = scalar<int>(f["days_after"], "filter.days_after");
    cfg.filter.validate();
  }

  if (auto r = root["remote"]) {
    check_keys(r,
               {"base_url", "model", "temperature", "max_retries", "max_concurrency", "timeout_ms", "initial_backoff_ms",
                "api_key_env", "cache", "offline"},
               "remote");
    auto& rc = cfg.remote;
    if (r["base_url"]) rc.base_url = scalar<std::string>(r["base_url"], "remote.base_url");
    if (r["model"]) rc.model_name = scalar<std::string>(r["model"], "remote.model");
    if (r["temperature"]) rc.temperature = scalar<double>(r["temperature"], "remote.temperature");
    if (r["max_retries"]) rc.max_retries = scalar<int>(r["max_retries"], "remote.max_retries");
    if (r["max_concurrency"]) rc.max_concurrency = scalar<int>(r["max_concurrency"], "remote.max_concurrency");
    if (r["timeout_ms"]) rc.timeout = std::chrono::milliseconds(scalar<int>(r["timeout_ms"], "remote.timeout_ms"));
    if (r["initial_backoff_ms"]) {
      rc.initial_backoff = std::chrono::milliseconds(scalar<int>(r["initial_backoff_ms"], "remote.initial_backoff_ms"));
    }
    if (r["api_key_env"]) rc.api_key_env = scalar<std::string>(r["api_key_env"], "remote.api_key_env");
    if (r["cache"]) rc.cache_path = resolve(base_dir, scalar<std::string>(r["cache"], "remote.cache"));
    if (r["offline"]) rc.offline = scalar<bool>(r["offline"], "remote.offline");
    rc.validate();
  }

  if (root["task"]) {
    cfg.task = scalar<std::string>(root["task"], "task");
    if (cfg.task != "both") parse_task(cfg.task);
  }
  if (root["seed"]) cfg.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["output"]) cfg.output = resolve(base_dir, scalar<std::string>(root["output"], "output"));
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_file(path), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json paths = nlohmann::json::object();
  for (const auto& [k, v] : c.paths) paths[k] = v.string();
  nlohmann::json resources = nlohmann::json::object();
  for (const auto& [k, v] : c.resources) resources[k] = v.string();
  nlohmann::json exempt = nlohmann::json::array();
  for (auto r : c.filter.section_cap_exempt_roles) exempt.push_back(std::string(to_string(r)));
  const auto& r = c.remote;
  return {{"paths", paths},
          {"resources", resources},
          {"filter",
           {{"min_tokens", c.filter.min_tokens},
            {"max_section_tokens", c.filter.max_section_tokens},
            {"exempt_roles", exempt},
            {"days_before", c.days_before},
            {"days_after", c.days_after}}},
          {"remote",
           {{"base_url", r.base_url},
            {"model", r.model_name},
            {"temperature", r.temperature},
            {"max_retries", r.max_retries},
            {"max_concurrency", r.max_concurrency},
            {"timeout_ms", r.timeout.count()},
            {"initial_backoff_ms", r.initial_backoff.count()},
            {"api_key_env", r.api_key_env},
            {"cache", r.cache_path ? r.cache_path->string() : ""},
            {"offline", r.offline}}},
          {"task", c.task},
          {"seed", c.seed},
          {"output", c.output.string()}};
}

}  // namespace sdoh::cli
