// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Exit codes: 0 all verdicts pass, 1 some verdict
// failed, 2 the configuration or the run raised an error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gibbs/experiment.hpp"

namespace {

constexpr int kExitFail = 1;
constexpr int kExitError = 2;

int report_error(const std::exception& e) {
  std::cerr << "error: " << e.what() << '\n';
  return kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo and flow experiments for the truncated Gibbs measure of DNLS"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned threads = 0;
  bool verbose = false;

  auto* run_cmd = app.add_subcommand("run", "run an experiment and write its record");
  run_cmd->add_option("--config", config_path, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "output directory for run.json and the CSV tables");
  run_cmd->add_option("--threads", threads, "worker threads (0 = hardware concurrency); results do not depend on it");
  run_cmd->add_flag("--verbose", verbose, "progress messages on stderr");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "check a configuration without running it");
  validate_cmd->add_option("--config", validate_path, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate_cmd) {
      const auto config = gibbs::load_config(validate_path);
      std::cout << "valid " << gibbs::to_string(config.experiment) << " configuration\n"
                << gibbs::to_json(config).dump(2) << '\n';
      return 0;
    }

    const auto config = gibbs::load_config(config_path);
    gibbs::RunOptions options;
    options.threads = threads;
    if (verbose) options.log = &std::cerr;
    const auto record = gibbs::run(config, options);

    std::cout << gibbs::format_verdicts(record);
    if (out_dir.empty()) out_dir = config.text("output");
    if (!out_dir.empty()) {
      gibbs::emit(record, out_dir);
      if (verbose) std::cerr << "wrote " << (std::filesystem::path(out_dir) / "run.json").string() << '\n';
    }
    std::cout << (record.pass() ? "PASS" : "FAIL") << ' ' << gibbs::to_string(config.experiment) << '\n';
    return record.pass() ? 0 : kExitFail;
  } catch (const gibbs::ConfigError& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    return report_error(e);
  }
}
