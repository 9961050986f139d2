#pragma once

// Exponential-utility optimization with a terminal liability, solved either by
// the backward equation in the drift-free frame (euler modes) or by the exact
// per-node recursion (dt-consistent mode, shared with the oracles).

#include <string>
#include <vector>

#include "bsdelab/generator.hpp"
#include "bsdelab/measure.hpp"
#include "bsdelab/oracles.hpp"
#include "bsdelab/solver.hpp"

namespace bsdelab {

enum class SolverMode { EulerHat, EulerPhysical, DtConsistent };

struct UtilityOptions {
  SolverMode mode = SolverMode::EulerHat;
  SolveOptions solve{};
  DpOptions dp{};
  bool truncated = false;  // run the clamped driver and check the moving bound
};

struct UtilityResult {
  double alpha = 1.0;
  SolverMode mode = SolverMode::EulerHat;
  std::vector<std::vector<double>> Y;      // certain liability per node
  std::vector<std::vector<double>> Z;      // integrand, node-major d
  std::vector<std::vector<double>> theta;  // optimal strategy, node-major d
  MarkField U;                             // jump integrand, node-major m
  MeasureChange dual;                      // optimizer of the dual problem
  TruncationProfile profile;               // documented growth profile
  double step_residual = 0.0;
  int picard_iterations = 0;
  int dp_fallbacks = 0;

  double y0() const { return Y[0][0]; }
};

/// V(x) = -exp(-alpha(x - Y)); strictly negative, increasing in x.
double value_function(double x, double y, double alpha);

UtilityResult solve_utility(const LatticeModel& model, std::span<const double> claim, double alpha,
                            const UtilityOptions& opts = {});

/// Same problem posed under an arbitrary pricing measure whose drift-adjusted
/// increments are mean-zero (no market-price-of-risk term); theta = Z there.
UtilityResult solve_utility_on_frame(const LatticeModel& model, const MeasureChange& pricing,
                                     std::span<const double> claim, double alpha,
                                     const UtilityOptions& opts = {});

/// Cumulative gains sum theta.dW^ along the tree, one value per node.
std::vector<std::vector<double>> wealth_process(const LatticeModel& model,
                                                const std::vector<std::vector<double>>& theta);

struct OptimalityReport {
  double optimal_martingale_residual = 0.0;  // max |E[R'] - R| for the solved strategy
  double max_drift_violation = 0.0;          // max over candidates/nodes of E[R'] - R (must be <= 0 + tol)
  double strictest_negative_drift = 0.0;     // most negative candidate drift seen
};

/// Martingale-optimality scan: R_t = -exp(-alpha(gains_t - Y_t)) must be a
/// martingale for the solved strategy and a supermartingale for every
/// candidate.
OptimalityReport verify_martingale_optimality(const LatticeModel& model, const UtilityResult& result,
                                              const std::vector<std::vector<std::vector<double>>>& candidates);

/// Multiplicative growth identity for L = exp(alpha Y): max node residual of
/// |E[L' exp(-alpha theta.dW^)]/L - 1| under the physical measure.
double l_process_identity(const LatticeModel& model, const UtilityResult& result);

struct DualityReport {
  double primal_scaled = 0.0;    // alpha * Y_0
  double dual_value = 0.0;       // alpha E^Q[B] - H(Q|P) at the constructed optimizer
  double gap = 0.0;              // primal_scaled - dual_value
  double martingale_residual = 0.0;
  double compensator_residual = 0.0;
  double normalization_error = 0.0;
};
DualityReport duality_report(const LatticeModel& model, const UtilityResult& result,
                             std::span<const double> claim);

}  // namespace bsdelab
