#pragma once

// Brute-force ground truth, independent of the backward-equation code paths:
// exact dynamic programming for the exponential problem (two parametrizations)
// and an exhaustive grid search over lattice martingale measures for the dual.

#include <functional>
#include <optional>
#include <vector>

#include "bsdelab/measure.hpp"
#include "bsdelab/solver.hpp"

namespace bsdelab {

struct DpOptions {
  double gradient_tol = 1e-12;
  int max_newton = 60;
  int threads = 1;
};

struct DpSolution {
  std::vector<std::vector<double>> Y;      // certainty-equivalent liability per node
  std::vector<std::vector<double>> theta;  // optimizer per node, node-major d
  int golden_fallbacks = 0;                // nodes where Newton stalled
  double y0() const { return Y[0][0]; }
};

/// Exact per-node recursion Y = min_theta (1/alpha) log E[exp(alpha(Y' -
/// theta.d))] under the given frame. The optimizer is found by safeguarded
/// Newton on the log objective (analytic gradient and curvature), falling back
/// to golden-section bracketing when a step fails to descend.
DpSolution entropic_recursion(const LatticeModel& model, const LatticeMeasure& frame,
                              std::span<const double> terminal, double alpha,
                              const DpOptions& opts = {});

/// Same optimum computed in the value parametrization V = -exp(alpha*Y):
/// maximizes E[V' exp(-alpha theta.d)] node by node with Newton on the plain
/// (not log) objective. Used to cross-check entropic_recursion.
DpSolution brute_force_primal(const LatticeModel& model, const LatticeMeasure& frame,
                              std::span<const double> terminal, double alpha,
                              const DpOptions& opts = {});

/// Expected utility E[-exp(-alpha(sum theta.d - B))] of a given strategy field
/// under the frame, by exact leaf enumeration.
double strategy_value(const LatticeModel& model, const LatticeMeasure& frame,
                      const std::vector<std::vector<double>>& theta,
                      std::span<const double> claim, double alpha);

struct DualGridSpec {
  double ratio = 1.02;        // multiplicative grid resolution
  double max_exponent = 4.0;  // tilts span e^{+-max_exponent}
  // When set, the grid scales this per-(node, mark) tilt field by the grid
  // values instead of sweeping constant tilts.
  std::optional<MarkField> base_tilt;
  long node_budget = 4096;
};

struct DualGridResult {
  double best_objective = -1e300;
  double best_tilt = 1.0;        // grid multiplier of the argmax
  MeasureChange best_change;
  std::vector<double> objectives;  // one per grid point, in grid order
  std::vector<double> tilts;
};

/// Exhaustive sweep of lattice martingale measures: the diffusion tilt is
/// pinned by drift removal, jump tilts range over the geometric grid. Requires
/// a small problem (<= 3 steps, <= 1 mark).
DualGridResult brute_force_dual(const LatticeModel& model, std::span<const double> claim,
                                double alpha, const DualGridSpec& spec = {});

}  // namespace bsdelab
