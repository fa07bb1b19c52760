#pragma once

#include "branchsim/branching.hpp"
#include "branchsim/config.hpp"

namespace branchsim {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  unsigned workers = 1;
  bool strict = false;
};

struct ExperimentReport {
  nlohmann::json document;
  bool any_failure = false;             // trend checks that ran and failed
  std::vector<std::string> skipped;     // hypothesis-guard skips
};

/// Executes the configured scenario across the t-grid, writes report.json
/// and the CSV tables into config.output_dir, and returns the report.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const RunOptions& opts);

/// Shortest decimal round-trip is not wanted here: the CSV contract pins
/// 17 significant digits for bit-stable diffs.
std::string format_float(double x);

void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace branchsim
