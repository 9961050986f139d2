#pragma once

// Exact scenario tree for a jump-diffusion market at desk scale.
//
// Each step crosses 2^d Bernoulli diffusion branches (one per sign pattern of
// the Brownian increment, equiprobable) with an (m+1)-way jump branch (no jump,
// or one jump of mark j). Branch index b = w*(m+1) + j. Children of node i at
// slice k are i*B + b at slice k+1, B = 2^d*(m+1). Conditional expectations on
// this tree are finite sums, so every identity checked downstream is exact.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bsdelab/claim.hpp"
#include "bsdelab/errors.hpp"

namespace bsdelab {

struct TimeGrid {
  double horizon = 1.0;
  int step_count = 1;
  double dt() const { return horizon / step_count; }
  double time(int k) const { return horizon * k / step_count; }
};

struct Mark {
  std::string label;
  std::vector<double> vector;  // in R^l, nonzero
  double weight = 0.0;         // lambda mass
};

struct MarkSpace {
  std::vector<Mark> marks;
  int count() const { return static_cast<int>(marks.size()); }
  double total_weight() const {
    double s = 0.0;
    for (const auto& m : marks) s += m.weight;
    return s;
  }
};

/// How a node-dependent coefficient is produced while building the tree.
struct CoefficientSpec {
  enum class Kind { Constant, Regime, SelfExciting } kind = Kind::Constant;
  // Constant: values[0]; Regime: values[state]; entries are flattened
  // (length d for phi, d*d for sigma, m for zeta).
  std::vector<std::vector<double>> values;
  // SelfExciting (zeta only): zeta_j = min(base_j*(1 + slope_j*total_jumps), cap_j).
  std::vector<double> base, slope, cap;
};

struct ModelConfig {
  TimeGrid grid;
  int asset_count = 1;
  std::vector<double> initial_price;
  MarkSpace marks;
  CoefficientSpec phi;    // market price of risk, per unit time
  CoefficientSpec sigma;  // volatility matrix, row-major
  CoefficientSpec zeta;   // compensator density per mark, bounded by c_nu
  double c_nu = 0.0;      // documented bound on zeta; 0 = derive from the coefficients
  int regime_count = 1;   // regime state = (initial_regime + total jumps) % regime_count
  int initial_regime = 0;
  long node_budget = 10'000'000;
};

struct ValidationReport {
  bool passed = true;
  double realized_c_nu = 0.0;
  double min_branch_probability = 1.0;
  double max_probability_sum_error = 0.0;    // |sum of child probs - 1|
  double max_brownian_mean_residual = 0.0;   // max |E[dW | node]|
  double max_jump_mean_residual = 0.0;       // max |E[1{jump=j}|node] - zeta*lambda*dt|
  double min_asset_price = 0.0;
  std::vector<std::string> violations;
};

class LatticeModel {
 public:
  struct Slice {
    long node_count = 0;
    std::vector<double> assets;       // node-major, d per node
    std::vector<double> phi;          // d per node
    std::vector<double> sigma;        // d*d per node, row-major
    std::vector<double> zeta;         // m per node
    std::vector<double> kappa;        // (m+1) per node: [no-jump, mark 1..m]
    std::vector<std::int32_t> jump_counts;  // m per node
    std::vector<std::int32_t> regime;       // 1 per node
  };

  const ModelConfig& config() const { return config_; }
  int steps() const { return config_.grid.step_count; }
  int assets() const { return config_.asset_count; }
  int mark_count() const { return config_.marks.count(); }
  double dt() const { return config_.grid.dt(); }
  double sqrt_dt() const { return sqrt_dt_; }
  double time(int k) const { return config_.grid.time(k); }

  int diffusion_branches() const { return 1 << config_.asset_count; }
  int jump_branches() const { return mark_count() + 1; }
  int branching() const { return diffusion_branches() * jump_branches(); }

  long nodes_at(int k) const { return slices_[static_cast<std::size_t>(k)].node_count; }
  long total_nodes() const { return total_nodes_; }
  const Slice& slice(int k) const { return slices_[static_cast<std::size_t>(k)]; }

  static long child_index(long node, int branch, int branching) {
    return node * branching + branch;
  }
  int branch_diffusion(int b) const { return b / jump_branches(); }
  int branch_jump(int b) const { return b % jump_branches(); }

  /// Brownian increment of diffusion pattern w (component i: +/- sqrt(dt)).
  double brownian_increment(int w, int i) const {
    return ((w >> i) & 1) ? sqrt_dt_ : -sqrt_dt_;
  }
  /// Drift-adjusted increment dW + phi*dt at a node.
  double tilted_increment(int k, long node, int w, int i) const {
    const Slice& s = slice(k);
    return brownian_increment(w, i) + s.phi[static_cast<std::size_t>(node) * assets() + i] * dt();
  }

  /// Probability under the physical measure of branch b at a node.
  double branch_probability(int k, long node, int b) const {
    const Slice& s = slice(k);
    return diffusion_weight_ * s.kappa[static_cast<std::size_t>(node) * jump_branches() + branch_jump(b)];
  }

  std::span<const double> asset_prices(int k, long node) const {
    const Slice& s = slice(k);
    return {s.assets.data() + static_cast<std::size_t>(node) * assets(), static_cast<std::size_t>(assets())};
  }
  std::span<const double> phi_at(int k, long node) const {
    const Slice& s = slice(k);
    return {s.phi.data() + static_cast<std::size_t>(node) * assets(), static_cast<std::size_t>(assets())};
  }
  std::span<const double> sigma_at(int k, long node) const {
    const Slice& s = slice(k);
    const std::size_t dd = static_cast<std::size_t>(assets()) * assets();
    return {s.sigma.data() + static_cast<std::size_t>(node) * dd, dd};
  }
  /// Mark masses kappa_j = zeta_j * lambda_j * dt, with the no-jump slot first.
  std::span<const double> kappa_at(int k, long node) const {
    const Slice& s = slice(k);
    return {s.kappa.data() + static_cast<std::size_t>(node) * jump_branches(), static_cast<std::size_t>(jump_branches())};
  }

  TerminalState state_at(int k, long node) const;
  std::vector<double> evaluate_claim(const ClaimExpr& claim) const;  // one value per leaf

  /// Human-readable root-to-node path, for error reports.
  std::string path_string(int k, long node) const;

  /// theta = Sigma^T shares with Sigma = diag(S) sigma.
  std::vector<double> theta_of_shares(int k, long node, std::span<const double> shares) const;
  /// shares = (Sigma^T)^{-1} theta; throws ModelError when Sigma is singular.
  std::vector<double> shares_of_theta(int k, long node, std::span<const double> theta) const;

  ValidationReport validate() const;

  double max_phi_norm() const { return max_phi_norm_; }

  friend LatticeModel build_lattice(const ModelConfig& config);

 private:
  ModelConfig config_;
  std::vector<Slice> slices_;
  double sqrt_dt_ = 0.0;
  double diffusion_weight_ = 1.0;  // 2^-d
  long total_nodes_ = 0;
  double max_phi_norm_ = 0.0;  // max over nodes of |phi| (euclidean)
};

/// Builds and checks the tree. Throws ConfigError for bad configuration
/// (budget, shapes) and ModelError for step-size violations, naming the node.
LatticeModel build_lattice(const ModelConfig& config);

}  // namespace bsdelab
