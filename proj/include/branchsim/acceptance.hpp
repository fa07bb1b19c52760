#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace branchsim::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  bool low_precision = false;
  std::string details;
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

struct Options {
  std::uint64_t seed = 0x5eedb0a7d1ceULL;
  unsigned workers = 1;
  // Replica multiplier; < 1 marks results low-precision but keeps the
  // statistical slack honest (it is recomputed from the actual counts).
  double scale = 1.0;
};

/// Runs the full acceptance suite. Tolerances and runtime budgets are pinned
/// in the implementation; both the CLI `verify` command and the ctest
/// acceptance binary call this.
std::vector<CriterionResult> run_all(const Options& opts);

bool all_passed(const std::vector<CriterionResult>& results);

/// "PASS  3 survival-exponent (12.3s) details..." one line per criterion.
std::string format_line(const CriterionResult& r);

}  // namespace branchsim::acceptance
