// Copyright 2026 The tsvf Authors
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

// Batch front-end: load a scenario config, run it deterministically, and
// emit a byte-stable report.
//
// Exit codes: 0 on success, 1 on config validation/parse failure, 2 when the
// scenario ran but a report check failed (including embedded module errors).

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "tsvf/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidConfig = 1;
constexpr int kExitScenarioFailed = 2;

int run_command(const std::string& config_path, bool seed_given,
                std::uint64_t seed, const std::string& out_flag,
                const std::string& format, unsigned jobs) {
  tsvf::ScenarioConfig cfg;
  try {
    cfg = tsvf::load_config(config_path);
  } catch (const tsvf::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  if (seed_given) tsvf::override_seed(cfg, seed);

  const tsvf::ScenarioReport report = tsvf::run(cfg, jobs);
  const std::string rendered = tsvf::emit_report(report, format);
  const std::string out_path = out_flag.empty() ? cfg.output_path : out_flag;
  try {
    if (out_path.empty()) {
      std::cout << rendered;
    } else {
      tsvf::write_report_file(rendered, out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  if (!tsvf::report_passed(report)) {
    for (const tsvf::ReportCheck& c : report.checks) {
      if (!c.passed) {
        std::cerr << "check failed: " << c.name << " observed=" << c.observed
                  << " require=" << c.requirement << "\n";
      }
    }
    return kExitScenarioFailed;
  }
  return kExitOk;
}

int validate_command(const std::string& config_path) {
  try {
    const tsvf::ScenarioConfig cfg = tsvf::load_config(config_path);
    std::cout << "valid: " << cfg.name << " (" << tsvf::to_string(cfg.kind)
              << ")\n";
    for (const std::string& note : cfg.notes) {
      std::cout << "note: " << note << "\n";
    }
    return kExitOk;
  } catch (const tsvf::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
}

int list_command() {
  for (const auto& [kind, description] : tsvf::scenario_catalog()) {
    std::cout << kind << "  " << description << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-boundary scenario runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string format = "text";
  unsigned jobs = 1;

  CLI::App* run = app.add_subcommand("run", "run a scenario config and emit its report");
  run->add_option("config", config_path, "scenario config file")->required();
  CLI::Option* seed_opt =
      run->add_option("--seed", seed, "override the config's seed");
  run->add_option("--out", out_path,
                  "write the report here instead of the config's output_path "
                  "or stdout");
  run->add_option("--format", format, "report format")
      ->check(CLI::IsMember({"text", "csv", "json-lines"}));
  run->add_option("--jobs", jobs, "worker threads for independent sweep rows")
      ->check(CLI::Range(1u, 256u));

  CLI::App* validate =
      app.add_subcommand("validate", "check a scenario config without running it");
  validate->add_option("config", config_path, "scenario config file")->required();

  app.add_subcommand("list-scenarios", "list the supported scenario kinds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalidConfig;
  }

  if (run->parsed()) {
    return run_command(config_path, seed_opt->count() > 0, seed, out_path,
                       format, jobs);
  }
  if (validate->parsed()) {
    return validate_command(config_path);
  }
  return list_command();
}
