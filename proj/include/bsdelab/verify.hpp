#pragma once

// The property suite: every structural identity the library promises, run
// against one configured scenario and reported as a pass/fail table. Checks
// that do not apply to a scenario (grid search on large trees, decomposition
// exactness for non-separable claims) are omitted rather than weakened.

#include <iosfwd>
#include <string>
#include <vector>

#include "bsdelab/config.hpp"

namespace bsdelab {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured quantity (meaning given by the name)
  double tolerance = 0.0;  // bound it was held against
  std::string detail;
};

struct VerifySummary {
  std::vector<CheckResult> checks;
  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

VerifySummary run_verification(const RunConfig& cfg);

void print_table(std::ostream& os, const VerifySummary& summary);

}  // namespace bsdelab
