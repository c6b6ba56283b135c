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

// Serves the chat-completions protocol locally for demos and manual tests.

#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "sdoh/stub_server.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local chat-completions stub for the SDoH workbench", "sdoh-stub-server"};
  int port = 0;
  std::string mode = "demo";
  std::string task = "any";
  std::string content;
  std::string lexicon;
  sdoh::stub::Faults faults;
  app.add_option("--port", port, "Port on 127.0.0.1 (0 picks a free one)")->capture_default_str();
  app.add_option("--mode", mode, "demo | fixed | lexicon | list | inject")
      ->check(CLI::IsMember({"demo", "fixed", "lexicon", "list", "inject"}))
      ->capture_default_str();
  app.add_option("--task", task, "Task for lexicon answers")->check(CLI::IsMember({"any", "adverse"}));
  app.add_option("--content", content, "Reply for --mode fixed");
  app.add_option("--lexicon", lexicon, "Lexicon rules CSV: keyword,category,adverse");
  app.add_option("--fail-first", faults.fail_first, "Answer the first N requests with --fail-status");
  app.add_option("--fail-status", faults.fail_status, "Status for scripted failures")->capture_default_str();
  app.add_option("--delay-min-ms", faults.delay_ms_min, "Minimum per-request delay");
  app.add_option("--delay-max-ms", faults.delay_ms_max, "Maximum per-request delay");
  app.add_flag("--hang", faults.hang, "Never answer (timeout testing)");
  CLI11_PARSE(app, argc, argv);

  try {
    auto rules = lexicon.empty() ? sdoh::LexiconRules::defaults() : sdoh::LexiconRules::load_csv(lexicon);
    const auto t = sdoh::parse_task(task);
    sdoh::stub::Responder responder;
    if (mode == "fixed") {
      responder = sdoh::stub::fixed_responder(content);
    } else if (mode == "lexicon") {
      responder = sdoh::stub::lexicon_responder(rules, t);
    } else if (mode == "list") {
      responder = sdoh::stub::list_responder();
    } else if (mode == "inject") {
      responder = sdoh::stub::injection_responder();
    } else {
      responder = sdoh::stub::demo_responder(rules, t);
    }
    sdoh::stub::StubServer server(responder, faults);
    server.start(port);
    std::cout << server.base_url() << std::endl;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
