// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gibbs/error.hpp"
#include "gibbs/random_field.hpp"
#include "gibbs/table.hpp"
#include "json.hpp"

namespace gibbs {

enum class ExperimentKind {
  kSample,
  kFunctionals,
  kCauchyRate,
  kChaos,
  kTails,
  kKernelSum,
  kFlow,
  kInvariance,
  kGnLp,
};

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);
const std::vector<ExperimentKind>& all_experiment_kinds();

enum class ParamType { kInt, kSeed, kReal, kIntList, kRealList, kString, kBool };

/// Declarative description of one experiment parameter. Every parameter has a
/// default, so a config may omit any of them.
struct ParamSpec {
  std::string key;
  ParamType type = ParamType::kInt;
  nlohmann::json fallback;  ///< default value; null only when `nullable`
  double min = -std::numeric_limits<double>::infinity();
  double max = std::numeric_limits<double>::infinity();
  bool min_exclusive = false;
  bool nullable = false;
  std::vector<std::string> choices;  ///< allowed values of a string parameter
  std::size_t min_items = 0;         ///< for list parameters
  bool strictly_increasing = false;  ///< for list parameters
  std::string help;
};

const std::vector<ParamSpec>& parameter_specs(ExperimentKind kind);

/// A configuration that failed validation. `violations` lists every problem,
/// each prefixed with the offending field path.
class ConfigError : public PreconditionError {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// A validated configuration. `parameters` holds every parameter of the
/// experiment with defaults filled in, so the echo in a RunRecord is complete.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kSample;
  nlohmann::json parameters = nlohmann::json::object();

  std::uint64_t seed() const;
  int integer(const std::string& key) const;
  double real(const std::string& key) const;
  std::optional<double> optional_real(const std::string& key) const;
  std::vector<int> integers(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::string text(const std::string& key) const;
  bool flag(const std::string& key) const;
};

/// Parses and validates JSON text of the form
///   {"experiment": "<name>", "parameters": {...}}.
/// Throws ConfigError listing every violation.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& config);

struct Verdict {
  std::string name;
  bool pass = false;
  double value = 0.0;  ///< the measured quantity the check is about
  std::string limit;   ///< human-readable acceptance condition
  std::string detail;
};

struct RunRecord {
  ExperimentConfig config;
  std::string generator;
  std::string normal_transform;
  SeedSpec seed;
  std::uint64_t bootstrap_seed = 0;
  double wall_time_seconds = 0.0;
  nlohmann::json payload = nlohmann::json::object();
  std::vector<Verdict> verdicts;
  std::vector<Table> tables;

  bool pass() const;
};

struct RunOptions {
  unsigned threads = 0;          ///< 0 picks the hardware concurrency; never changes results
  std::ostream* log = nullptr;   ///< progress messages when non-null
};

/// Dispatches to the experiment. Module errors propagate with the experiment
/// name prepended; the error type is preserved.
RunRecord run(const ExperimentConfig& config, const RunOptions& options = {});

/// The record as written to run.json. Tables appear by name and file only;
/// their rows live in the CSV files.
nlohmann::json to_json(const RunRecord& record);

/// Writes <dir>/run.json and <dir>/<table>.csv for every table. Creates `dir`
/// if needed. Output is a pure function of the record, so emitting twice
/// yields identical bytes. I/O failures throw std::filesystem::filesystem_error.
void emit(const RunRecord& record, const std::filesystem::path& dir);

/// One line per verdict, "PASS name value (limit) detail".
std::string format_verdicts(const RunRecord& record);

}  // namespace gibbs
