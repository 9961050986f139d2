#pragma once

// Equivalent measure changes on the lattice. A change is stored as one strictly
// positive factor per branch; product-form changes (independent diffusion and
// jump tilts within a step) also keep the two parts separately so the
// factorization can be re-checked. The no-jump factor always absorbs the jump
// normalization, so the per-step conditional expectation of the factor is 1
// exactly and mark masses transform multiplicatively.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bsdelab/lattice.hpp"

namespace bsdelab {

struct MeasureChange {
  std::string label = "identity";
  // One entry per (slice k < N, node, branch).
  std::vector<std::vector<double>> factors;
  // Product structure: diffusion part per (node, w), jump part per (node, j).
  bool product_form = true;
  std::vector<std::vector<double>> diffusion_factors;
  std::vector<std::vector<double>> jump_factors;
  // Cumulative density per (slice, node); slice 0 = {1}.
  std::vector<std::vector<double>> density;
  // Transformed mark masses per (slice k < N, node, j) with no-jump first.
  std::vector<std::vector<double>> kappa;

  double factor(int k, long node, int b, int branching) const {
    return factors[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * branching + b];
  }
};

/// Which increments the solver regresses against.
enum class DriverKind { Physical, DriftAdjusted };

/// A solve frame: branch probabilities, mark masses and driver increments.
class LatticeMeasure {
 public:
  LatticeMeasure(const LatticeModel& model, DriverKind driver);
  LatticeMeasure(const LatticeModel& model, const MeasureChange& change, DriverKind driver);

  const LatticeModel& model() const { return *model_; }
  DriverKind driver() const { return driver_; }
  const std::string& label() const { return label_; }

  double probability(int k, long node, int b) const {
    return probs_[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * branching_ + b];
  }
  std::span<const double> mark_mass(int k, long node) const {
    const int jb = model_->jump_branches();
    return {kappa_[static_cast<std::size_t>(k)].data() + static_cast<std::size_t>(node) * jb,
            static_cast<std::size_t>(jb)};
  }
  double driver_increment(int k, long node, int w, int i) const {
    return driver_ == DriverKind::Physical ? model_->brownian_increment(w, i)
                                           : model_->tilted_increment(k, node, w, i);
  }

 private:
  const LatticeModel* model_;
  DriverKind driver_;
  std::string label_;
  int branching_;
  std::vector<std::vector<double>> probs_;
  std::vector<std::vector<double>> kappa_;
};

/// A per-(node, mark) field, one vector per slice (empty for terminal slice).
using MarkField = std::vector<std::vector<double>>;

MeasureChange identity_change(const LatticeModel& model);

/// Removes the asset drift: diffusion factor 1 - phi.dW, jump factors 1.
/// Throws ModelError when a factor is nonpositive (step too coarse).
MeasureChange minimal_martingale_measure(const LatticeModel& model);

/// Combined change: diffusion factor 1 - phi.dW, jump factor exp(alpha*U_j),
/// no-jump factor renormalized so mark masses transform to exp(alpha*U)*kappa
/// exactly. U is a MarkField (per slice, node-major, one entry per mark).
MeasureChange exponential_tilt_from_U(const LatticeModel& model, const MarkField& U, double alpha,
                                      std::string label = "entropy-tilt");

/// Jump-only retilt of an existing change: new jump factor_j = base_j * extra_j,
/// no-jump renormalized; diffusion factors kept. Used for the martingale tilt
/// h(U)+1 on top of the entropy change.
MeasureChange retilt_jumps(const LatticeModel& model, const MeasureChange& base,
                           const std::function<double(int k, long node, int j)>& extra,
                           std::string label);

/// A change whose per-branch factor is given directly (normalized per node by
/// construction of the caller); product_form is false.
MeasureChange change_from_branch_factors(const LatticeModel& model,
                                         std::vector<std::vector<double>> factors,
                                         std::string label);

/// Path probabilities under the physical measure, one vector per slice.
std::vector<std::vector<double>> path_probabilities(const LatticeModel& model);

/// max over slices of |E^P[density_k] - 1|.
double density_normalization_error(const LatticeModel& model, const MeasureChange& change);

/// max over (node, component) of |E^Q[S_{k+1} - S_k | node]|.
double martingale_residual(const LatticeModel& model, const MeasureChange& change);

/// max over (node, mark) of |sum_b q_b 1{jump=j} - kappa'_j|.
double compensator_transform_residual(const LatticeModel& model, const MeasureChange& change);

/// max over branches of |combined - diffusion-only * jump-only| for a
/// product-form change, each part rebuilt independently.
double factorization_residual(const LatticeModel& model, const MeasureChange& change);

/// sum over leaves of q log(q/p); >= 0, 0 iff identity.
double relative_entropy(const LatticeModel& model, const MeasureChange& change);

/// Entropy, payoff expectation and per-slice normalization drift in a single
/// forward pass.
struct ChangeStatistics {
  double entropy = 0.0;
  double expectation = 0.0;
  double normalization_error = 0.0;
};
ChangeStatistics change_statistics(const LatticeModel& model, const MeasureChange& change,
                                   std::span<const double> leaf_values);

/// E^Q of a leaf-indexed payoff.
double expectation(const LatticeModel& model, const MeasureChange& change,
                   std::span<const double> leaf_values);

/// alpha * E^Q[B] - H(Q|P).
double dual_objective(const LatticeModel& model, const MeasureChange& change,
                      std::span<const double> claim_leaves, double alpha);

/// max over nodes of |density ratio along one step - exp(-alpha*(theta.dW^ -
/// dY))|: the two density computations of the optimizer compared branch-wise.
/// Y is node-indexed per slice; theta is node-major (d per node).
double exponential_density_gap(const LatticeModel& model, const MeasureChange& change,
                               const std::vector<std::vector<double>>& Y,
                               const std::vector<std::vector<double>>& theta, double alpha);

}  // namespace bsdelab
