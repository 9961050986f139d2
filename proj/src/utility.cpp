#include "bsdelab/utility.hpp"

#include <cmath>

#include "bsdelab/linalg.hpp"

namespace bsdelab {
namespace {

/// Integrand extraction from a given Y-field under a frame (the solver does
/// this inline; the recursion route needs it after the fact).
void extract_fields(const LatticeModel& model, const LatticeMeasure& frame,
                    const std::vector<std::vector<double>>& Y, std::vector<std::vector<double>>& Z,
                    MarkField& U) {
  const int N = model.steps();
  const int d = model.assets();
  const int m = model.mark_count();
  const int B = model.branching();
  Z.assign(static_cast<std::size_t>(N), {});
  U.assign(static_cast<std::size_t>(N), {});
  for (int k = 0; k < N; ++k) {
    const long n = model.nodes_at(k);
    Z[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(n) * d, 0.0);
    U[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(n) * std::max(m, 1), 0.0);
    const auto& Ynext = Y[static_cast<std::size_t>(k) + 1];
    for (long node = 0; node < n; ++node) {
      // Reuse the solver's statistics through a zero-generator one-node step:
      // mean and integrands only depend on the next slice.
      double mean = 0.0;
      std::vector<double> dbar(static_cast<std::size_t>(d), 0.0);
      for (int b = 0; b < B; ++b) {
        const double q = frame.probability(k, node, b);
        mean += q * Ynext[static_cast<std::size_t>(LatticeModel::child_index(node, b, B))];
        const int w = model.branch_diffusion(b);
        for (int i = 0; i < d; ++i) dbar[static_cast<std::size_t>(i)] += q * frame.driver_increment(k, node, w, i);
      }
      std::vector<double> gram(static_cast<std::size_t>(d) * d, 0.0), rhs(static_cast<std::size_t>(d), 0.0),
          z(static_cast<std::size_t>(d), 0.0);
      std::vector<double> jmean(static_cast<std::size_t>(m) + 1, 0.0), jmass(static_cast<std::size_t>(m) + 1, 0.0);
      for (int b = 0; b < B; ++b) {
        const double q = frame.probability(k, node, b);
        const long c = LatticeModel::child_index(node, b, B);
        const int w = model.branch_diffusion(b);
        const double dy = Ynext[static_cast<std::size_t>(c)] - mean;
        for (int i = 0; i < d; ++i) {
          const double di = frame.driver_increment(k, node, w, i) - dbar[static_cast<std::size_t>(i)];
          rhs[static_cast<std::size_t>(i)] += q * dy * di;
          for (int j = 0; j < d; ++j) {
            const double dj = frame.driver_increment(k, node, w, j) - dbar[static_cast<std::size_t>(j)];
            gram[static_cast<std::size_t>(i) * d + j] += q * di * dj;
          }
        }
        const int j = model.branch_jump(b);
        jmean[static_cast<std::size_t>(j)] += q * Ynext[static_cast<std::size_t>(c)];
        jmass[static_cast<std::size_t>(j)] += q;
      }
      if (!linalg::solve(gram, rhs, z))
        throw NumericalError("degenerate driver covariance at node " + model.path_string(k, node));
      for (int i = 0; i < d; ++i) Z[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * d + i] = z[static_cast<std::size_t>(i)];
      if (m > 0) {
        const double nj = jmean[0] / jmass[0];
        for (int j = 0; j < m; ++j)
          U[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * m + j] =
              jmean[static_cast<std::size_t>(j) + 1] / jmass[static_cast<std::size_t>(j) + 1] - nj;
      }
    }
  }
}

double claim_bound(std::span<const double> claim) {
  double b = 0.0;
  for (double v : claim) b = std::max(b, std::fabs(v));
  return b;
}

UtilityResult solve_core(const LatticeModel& model, const MeasureChange* pricing,
                         std::span<const double> claim, double alpha, const UtilityOptions& opts) {
  if (!(alpha > 0.0)) throw ConfigError("risk aversion must be > 0");
  UtilityResult res;
  res.alpha = alpha;
  res.mode = opts.mode;

  const bool framed = pricing != nullptr;
  const GeneratorSpec gen = framed ? GeneratorSpec::indifference(alpha)
                            : opts.mode == SolverMode::EulerPhysical
                                ? GeneratorSpec::entropic_physical(alpha)
                                : GeneratorSpec::entropic(alpha);
  if (opts.truncated && opts.mode == SolverMode::EulerPhysical)
    throw ConfigError("the bounded route runs in the drift-free frame, not euler-physical");
  // The documented profile is the drift-free one regardless of mode.
  res.profile = (framed ? GeneratorSpec::indifference(alpha) : GeneratorSpec::entropic(alpha))
                    .growth_profile(claim_bound(claim) +
                                        model.config().grid.horizon * model.max_phi_norm() *
                                            model.max_phi_norm() / (2.0 * alpha),
                                    framed ? 0.0 : model.max_phi_norm());

  // The home frame of the solve: drift-adjusted increments are mean-zero there.
  const MeasureChange home_change = framed ? *pricing : minimal_martingale_measure(model);
  const LatticeMeasure home(model, home_change, DriverKind::DriftAdjusted);

  if (opts.mode == SolverMode::DtConsistent) {
    // Exact recursion under the pricing measure (the physical one when none is
    // given): probabilities of the problem, drift-adjusted gains.
    const LatticeMeasure dp_frame = framed ? home : LatticeMeasure(model, DriverKind::DriftAdjusted);
    DpSolution dp = entropic_recursion(model, dp_frame, claim, alpha, opts.dp);
    res.Y = std::move(dp.Y);
    res.theta = std::move(dp.theta);
    res.dp_fallbacks = dp.golden_fallbacks;
    extract_fields(model, home, res.Y, res.Z, res.U);
    if (opts.truncated) {
      BsdeSolution view;
      view.Y = res.Y;
      view.U = res.U;
      const BoundReport br = bound_report(model, view, res.profile);
      if (br.max_y_excess > opts.solve.bound_tolerance ||
          br.max_u_excess > opts.solve.bound_tolerance)
        throw NumericalError("bound violated on the recursion route: excess " +
                             std::to_string(std::max(br.max_y_excess, br.max_u_excess)));
    }
  } else {
    SolveOptions sopts = opts.solve;
    if (opts.truncated) {
      sopts.truncated = true;
      sopts.profile = res.profile;
    }
    const LatticeMeasure frame = opts.mode == SolverMode::EulerPhysical && !framed
                                     ? LatticeMeasure(model, DriverKind::Physical)
                                     : home;
    BsdeSolution sol = solve_bsde(model, frame, gen, claim, sopts);
    res.step_residual = sol.max_step_residual;
    res.picard_iterations = sol.max_picard_iterations;
    res.Y = std::move(sol.Y);
    res.Z = std::move(sol.Z);
    res.U = std::move(sol.U);
    // theta = Z + phi/alpha in the market problem, Z alone under a frame.
    const int d = model.assets();
    res.theta.assign(static_cast<std::size_t>(model.steps()), {});
    for (int k = 0; k < model.steps(); ++k) {
      const long n = model.nodes_at(k);
      auto& th = res.theta[static_cast<std::size_t>(k)];
      th.assign(static_cast<std::size_t>(n) * d, 0.0);
      for (long node = 0; node < n; ++node) {
        const auto phi = model.phi_at(k, node);
        for (int i = 0; i < d; ++i)
          th[static_cast<std::size_t>(node) * d + i] =
              res.Z[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * d + i] +
              (framed ? 0.0 : phi[static_cast<std::size_t>(i)] / alpha);
      }
    }
  }

  if (!framed) res.dual = exponential_tilt_from_U(model, res.U, alpha, "dual-optimizer");
  return res;
}

}  // namespace

double value_function(double x, double y, double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("risk aversion must be > 0");
  return -std::exp(-alpha * (x - y));
}

UtilityResult solve_utility(const LatticeModel& model, std::span<const double> claim, double alpha,
                            const UtilityOptions& opts) {
  return solve_core(model, nullptr, claim, alpha, opts);
}

UtilityResult solve_utility_on_frame(const LatticeModel& model, const MeasureChange& pricing,
                                     std::span<const double> claim, double alpha,
                                     const UtilityOptions& opts) {
  return solve_core(model, &pricing, claim, alpha, opts);
}

std::vector<std::vector<double>> wealth_process(const LatticeModel& model,
                                                const std::vector<std::vector<double>>& theta) {
  const int N = model.steps();
  const int B = model.branching();
  const int d = model.assets();
  std::vector<std::vector<double>> g(static_cast<std::size_t>(N) + 1);
  g[0].assign(1, 0.0);
  for (int k = 0; k < N; ++k) {
    const long n = model.nodes_at(k);
    g[static_cast<std::size_t>(k) + 1].resize(static_cast<std::size_t>(n) * B);
    for (long node = 0; node < n; ++node)
      for (int b = 0; b < B; ++b) {
        const int w = model.branch_diffusion(b);
        double dot = 0.0;
        for (int i = 0; i < d; ++i)
          dot += theta[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * d + i] *
                 model.tilted_increment(k, node, w, i);
        g[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(LatticeModel::child_index(node, b, B))] =
            g[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)] + dot;
      }
  }
  return g;
}

OptimalityReport verify_martingale_optimality(
    const LatticeModel& model, const UtilityResult& result,
    const std::vector<std::vector<std::vector<double>>>& candidates) {
  OptimalityReport rep;
  const int N = model.steps();
  const int B = model.branching();
  const int d = model.assets();

  auto scan = [&](const std::vector<std::vector<double>>& theta, bool optimal) {
    const auto gains = wealth_process(model, theta);
    for (int k = 0; k < N; ++k) {
      for (long node = 0; node < model.nodes_at(k); ++node) {
        const double r = -std::exp(-result.alpha * (gains[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)] -
                                                    result.Y[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)]));
        double er = 0.0;
        for (int b = 0; b < B; ++b) {
          const long c = LatticeModel::child_index(node, b, B);
          er += model.branch_probability(k, node, b) *
                -std::exp(-result.alpha * (gains[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(c)] -
                                           result.Y[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(c)]));
        }
        const double drift = er - r;
        if (optimal) rep.optimal_martingale_residual = std::max(rep.optimal_martingale_residual, std::fabs(drift));
        rep.max_drift_violation = std::max(rep.max_drift_violation, drift);
        rep.strictest_negative_drift = std::min(rep.strictest_negative_drift, drift);
      }
    }
    (void)d;
  };

  scan(result.theta, true);
  for (const auto& cand : candidates) scan(cand, false);
  return rep;
}

double l_process_identity(const LatticeModel& model, const UtilityResult& result) {
  const int N = model.steps();
  const int B = model.branching();
  const int d = model.assets();
  double worst = 0.0;
  for (int k = 0; k < N; ++k) {
    for (long node = 0; node < model.nodes_at(k); ++node) {
      const double L = std::exp(result.alpha * result.Y[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)]);
      double mean = 0.0;
      for (int b = 0; b < B; ++b) {
        const long c = LatticeModel::child_index(node, b, B);
        const int w = model.branch_diffusion(b);
        double dot = 0.0;
        for (int i = 0; i < d; ++i)
          dot += result.theta[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * d + i] *
                 model.tilted_increment(k, node, w, i);
        mean += model.branch_probability(k, node, b) *
                std::exp(result.alpha * result.Y[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(c)]) *
                std::exp(-result.alpha * dot);
      }
      worst = std::max(worst, std::fabs(mean / L - 1.0));
    }
  }
  return worst;
}

DualityReport duality_report(const LatticeModel& model, const UtilityResult& result,
                             std::span<const double> claim) {
  DualityReport rep;
  rep.primal_scaled = result.alpha * result.y0();
  const ChangeStatistics st = change_statistics(model, result.dual, claim);
  rep.dual_value = result.alpha * st.expectation - st.entropy;
  rep.gap = rep.primal_scaled - rep.dual_value;
  rep.martingale_residual = martingale_residual(model, result.dual);
  rep.compensator_residual = compensator_transform_residual(model, result.dual);
  rep.normalization_error = st.normalization_error;
  return rep;
}

}  // namespace bsdelab
