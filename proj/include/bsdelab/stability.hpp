#pragma once

// Conditional continuity diagnostics for two solutions on the same tree: at
// every node the forward-looking energy of the solution gap is compared with
// the energy of the data gap, and the ratio field is reported.

#include <functional>
#include <vector>

#include "bsdelab/solver.hpp"

namespace bsdelab {

struct StabilityReport {
  // Node-indexed fields, one vector per slice.
  std::vector<std::vector<double>> lhs;    // E[sup |dY|^2 + sum |dZ|^2 dt + sum |dU|^2 mass]
  std::vector<std::vector<double>> rhs;    // E[|dB|^2 + sum |df|^2 dt]
  std::vector<std::vector<double>> ratio;  // lhs / rhs where rhs > 0
  double max_ratio = 0.0;
  double root_ratio = 0.0;
};

/// df_at(k, node) evaluates the generator difference at the first solution's
/// arguments; pass {} when both solves used the same driver.
StabilityReport stability_gap(const LatticeModel& model, const LatticeMeasure& frame,
                              const BsdeSolution& a, const BsdeSolution& b,
                              std::span<const double> delta_terminal,
                              const std::function<double(int, long)>& df_at = {});

}  // namespace bsdelab
