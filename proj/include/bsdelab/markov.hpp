#pragma once

// Recombining solver for constant-coefficient single-asset models with at most
// one mark. Node values on the full tree depend only on (up-moves, jump count)
// there, so this computes the same numbers on a quadratic state space and
// reaches step counts the full tree cannot. Equivalence against the tree
// engine at small N is part of the test suite.

#include "bsdelab/claim.hpp"
#include "bsdelab/lattice.hpp"

namespace bsdelab {

struct MarkovPoint {
  int steps = 0;
  double euler_y0 = 0.0;      // compensated one-step map in the drift-free frame
  double euler_theta0 = 0.0;  // Z + phi/alpha at the root
  double dp_y0 = 0.0;         // exact per-node recursion (the oracle value)
  double dp_theta0 = 0.0;
};

/// Solves the utility problem for the configured market with `steps` steps.
/// Requires constant phi/sigma/zeta, one asset, and at most one mark.
MarkovPoint markov_solve(const ModelConfig& config, int steps, const ClaimExpr& claim,
                         double alpha);

}  // namespace bsdelab
