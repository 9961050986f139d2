#include <doctest.h>

#include <cmath>

#include "bsdelab/utility.hpp"
#include "test_models.hpp"

using namespace bsdelab;
using namespace bsdelab::testing;

namespace {

double max_field_diff(const std::vector<std::vector<double>>& a,
                      const std::vector<std::vector<double>>& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a[k].size(); ++i) worst = std::max(worst, std::fabs(a[k][i] - b[k][i]));
  return worst;
}

}  // namespace

TEST_CASE("driftless market with no claim is inert") {
  ModelConfig cfg = one_step_jump(0.0);
  const LatticeModel model = build_lattice(cfg);
  const UtilityResult res = solve_utility(model, constant_claim(model, 0.0), 1.5, {});
  for (const auto& slice : res.Y)
    for (double y : slice) CHECK(y == 0.0);
  for (const auto& slice : res.theta)
    for (double th : slice) CHECK(th == 0.0);
  CHECK(value_function(0.3, res.y0(), 1.5) == doctest::Approx(-std::exp(-1.5 * 0.3)).epsilon(1e-15));
}

TEST_CASE("flat-market closed form: value and strategy") {
  for (int steps : {1, 4, 10}) {
    const LatticeModel model = build_lattice(flat_market(steps));
    const UtilityResult res = solve_utility(model, constant_claim(model, 0.0), 2.0, {});
    CHECK(std::fabs(res.y0() + 0.04) <= 1e-12);
    for (const auto& slice : res.theta)
      for (double th : slice) CHECK(std::fabs(th - 0.2) <= 1e-12);
    CHECK(value_function(0.0, res.y0(), 2.0) == doctest::Approx(-std::exp(-0.08)).epsilon(1e-13));
  }
  SUBCASE("the exact one-step optimizer matches its closed form") {
    const LatticeModel model = build_lattice(flat_market(1, 0));
    UtilityOptions opts;
    opts.mode = SolverMode::DtConsistent;
    const UtilityResult res = solve_utility(model, constant_claim(model, 0.0), 2.0, opts);
    const double x = std::atanh(0.4);  // sqrt(dt) = 1
    CHECK(res.theta[0][0] == doctest::Approx(x / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("value function basics") {
  CHECK(value_function(0.0, 0.0, 1.0) == -1.0);
  CHECK(value_function(1.0, 0.5, 2.0) == doctest::Approx(-std::exp(-1.0)).epsilon(1e-15));
  // Cash invariance.
  CHECK(value_function(0.7 + 0.2, 0.1 + 0.2, 1.3) ==
        doctest::Approx(value_function(0.7, 0.1, 1.3)).epsilon(1e-15));
  CHECK(value_function(1.0, 0.5, 2.0) < 0.0);
  CHECK(value_function(1.1, 0.5, 2.0) > value_function(1.0, 0.5, 2.0));
  CHECK_THROWS_AS(value_function(0.0, 0.0, -1.0), ConfigError);
}

TEST_CASE("physical and drift-free formulations agree on separable claims") {
  const LatticeModel model = build_lattice(jump_market(3));
  const auto claim = jump_indicator_claim(model);
  UtilityOptions hat, phys;
  hat.mode = SolverMode::EulerHat;
  phys.mode = SolverMode::EulerPhysical;
  const UtilityResult a = solve_utility(model, claim, 1.0, hat);
  const UtilityResult b = solve_utility(model, claim, 1.0, phys);
  CHECK(max_field_diff(a.Y, b.Y) <= 1e-10);
  CHECK(max_field_diff(a.theta, b.theta) <= 1e-10);
}

TEST_CASE("exact mode reproduces the oracle through the solver plumbing") {
  const LatticeModel model = build_lattice(jump_market(2));
  const auto claim = jump_indicator_claim(model);
  UtilityOptions opts;
  opts.mode = SolverMode::DtConsistent;
  const UtilityResult res = solve_utility(model, claim, 1.0, opts);
  const LatticeMeasure pframe(model, DriverKind::DriftAdjusted);
  const DpSolution oracle = brute_force_primal(model, pframe, claim, 1.0);
  CHECK(std::fabs(res.y0() - oracle.y0()) <= 1e-12);
  CHECK(max_field_diff(res.theta, oracle.theta) <= 1e-12);
}

TEST_CASE("wealth process") {
  const LatticeModel model = build_lattice(flat_market(1, 0));
  SUBCASE("zero strategy accrues nothing") {
    const auto g = wealth_process(model, {{0.0}});
    for (double v : g[1]) CHECK(v == 0.0);
  }
  SUBCASE("unit strategy accrues the adjusted increments") {
    const auto g = wealth_process(model, {{1.0}});
    CHECK(g[1][1] == doctest::Approx(1.0 + 0.4).epsilon(1e-15));   // +sqrt(dt) + phi dt
    CHECK(g[1][0] == doctest::Approx(-1.0 + 0.4).epsilon(1e-15));  // -sqrt(dt) + phi dt
  }
  SUBCASE("optimal gains are centered under the dual measure") {
    const LatticeModel m2 = build_lattice(jump_market(2));
    const auto claim = jump_indicator_claim(m2);
    UtilityOptions opts;
    opts.mode = SolverMode::DtConsistent;
    const UtilityResult res = solve_utility(m2, claim, 1.0, opts);
    const auto gains = wealth_process(m2, res.theta);
    const auto pp = path_probabilities(m2);
    double mean = 0.0;
    for (long i = 0; i < m2.nodes_at(2); ++i)
      mean += pp[2][static_cast<std::size_t>(i)] *
              res.dual.density[2][static_cast<std::size_t>(i)] * gains[2][static_cast<std::size_t>(i)];
    CHECK(std::fabs(mean) <= 1e-12);
  }
}

TEST_CASE("martingale optimality of the exact solution") {
  const LatticeModel model = build_lattice(jump_market(2));
  const auto claim = jump_indicator_claim(model);
  UtilityOptions opts;
  opts.mode = SolverMode::DtConsistent;
  const UtilityResult res = solve_utility(model, claim, 1.0, opts);
  auto shifted = res.theta;
  for (auto& slice : shifted)
    for (auto& th : slice) th += 0.5;
  const OptimalityReport rep = verify_martingale_optimality(model, res, {shifted});
  CHECK(rep.optimal_martingale_residual <= 1e-12);
  CHECK(rep.max_drift_violation <= 1e-12);
  CHECK(rep.strictest_negative_drift < -1e-4);  // the perturbed strategy is strictly dominated

  SUBCASE("euler mode leaves a quadratic per-node residual") {
    UtilityOptions eopts;
    const UtilityResult eres = solve_utility(model, claim, 1.0, eopts);
    const OptimalityReport erep = verify_martingale_optimality(model, eres, {});
    CHECK(erep.optimal_martingale_residual > 1e-8);
    CHECK(erep.optimal_martingale_residual < 1e-1);
  }
  SUBCASE("degenerate market: flat value is a martingale everywhere") {
    const LatticeModel inert = build_lattice(one_step_jump(0.0));
    const UtilityResult flat = solve_utility(inert, constant_claim(inert, 0.0), 1.0, opts);
    const OptimalityReport frep = verify_martingale_optimality(inert, flat, {});
    CHECK(frep.optimal_martingale_residual <= 1e-15);
  }
}

TEST_CASE("growth identity for the exponential of the value") {
  SUBCASE("flat market, exact mode") {
    const LatticeModel model = build_lattice(flat_market(4));
    UtilityOptions opts;
    opts.mode = SolverMode::DtConsistent;
    const UtilityResult res = solve_utility(model, constant_claim(model, 0.0), 2.0, opts);
    CHECK(l_process_identity(model, res) <= 1e-12);
  }
  SUBCASE("degenerate market is exactly flat") {
    const LatticeModel model = build_lattice(one_step_jump(0.0));
    const UtilityResult res = solve_utility(model, constant_claim(model, 0.0), 1.0, {});
    CHECK(l_process_identity(model, res) == 0.0);
  }
  SUBCASE("jump claim, exact mode") {
    const LatticeModel model = build_lattice(jump_market(2));
    UtilityOptions opts;
    opts.mode = SolverMode::DtConsistent;
    const UtilityResult res = solve_utility(model, jump_indicator_claim(model), 1.0, opts);
    CHECK(l_process_identity(model, res) <= 1e-12);
  }
}

TEST_CASE("duality at the optimum") {
  const LatticeModel model = build_lattice(jump_market(2));
  const auto claim = jump_indicator_claim(model);
  UtilityOptions opts;
  opts.mode = SolverMode::DtConsistent;
  SUBCASE("zero claim: value equals scaled entropy of the tilt") {
    const UtilityResult res = solve_utility(model, constant_claim(model, 0.0), 1.0, opts);
    const DualityReport rep = duality_report(model, res, constant_claim(model, 0.0));
    CHECK(std::fabs(rep.gap) <= 1e-13);
    CHECK(rep.martingale_residual <= 1e-14);
    CHECK(rep.normalization_error <= 1e-14);
  }
  SUBCASE("jump claim: dual value is dominated and close") {
    const UtilityResult res = solve_utility(model, claim, 1.0, opts);
    const DualityReport rep = duality_report(model, res, claim);
    CHECK(rep.gap >= -1e-12);  // candidate measures never beat the primal
    CHECK(std::fabs(rep.gap) <= 1e-2);
    CHECK(rep.martingale_residual <= 1e-14);
    CHECK(rep.compensator_residual <= 1e-15);
  }
}

TEST_CASE("ordinary and multiplicative density computations coincide for asset claims") {
  const LatticeModel model = build_lattice(jump_market(3));
  const auto claim = terminal_asset_claim(model);
  UtilityOptions opts;
  opts.mode = SolverMode::DtConsistent;
  const UtilityResult res = solve_utility(model, claim, 1.0, opts);
  double umax = 0.0;
  for (const auto& slice : res.U)
    for (double u : slice) umax = std::max(umax, std::fabs(u));
  REQUIRE(umax <= 1e-12);  // asset claims put no load on the jump tilt
  CHECK(exponential_density_gap(model, res.dual, res.Y, res.theta, 1.0) <= 1e-12);

  SUBCASE("jump claims genuinely break the product form") {
    const auto jclaim = jump_indicator_claim(model);
    const UtilityResult jres = solve_utility(model, jclaim, 1.0, opts);
    CHECK(exponential_density_gap(model, jres.dual, jres.Y, jres.theta, 1.0) > 1e-4);
  }
}

TEST_CASE("risk-aversion scaling of the zero-claim solution") {
  const LatticeModel model = build_lattice(jump_market(2));
  for (SolverMode mode : {SolverMode::EulerHat, SolverMode::DtConsistent}) {
    UtilityOptions opts;
    opts.mode = mode;
    const UtilityResult ref = solve_utility(model, constant_claim(model, 0.0), 1.0, opts);
    for (double alpha : {0.5, 2.0}) {
      const UtilityResult run = solve_utility(model, constant_claim(model, 0.0), alpha, opts);
      double worst = 0.0;
      for (std::size_t k = 0; k < run.Y.size(); ++k)
        for (std::size_t i = 0; i < run.Y[k].size(); ++i)
          worst = std::max(worst, std::fabs(alpha * run.Y[k][i] - ref.Y[k][i]));
      for (std::size_t k = 0; k < run.Z.size(); ++k)
        for (std::size_t i = 0; i < run.Z[k].size(); ++i) {
          worst = std::max(worst, std::fabs(alpha * run.Z[k][i] - ref.Z[k][i]));
          worst = std::max(worst, std::fabs(alpha * run.U[k][i] - ref.U[k][i]));
        }
      CHECK(worst <= 1e-12);
      // Consequently the tilt is invariant in alpha.
      double dworst = 0.0;
      for (std::size_t k = 0; k < run.dual.density.size(); ++k)
        for (std::size_t i = 0; i < run.dual.density[k].size(); ++i)
          dworst = std::max(dworst, std::fabs(run.dual.density[k][i] - ref.dual.density[k][i]));
      CHECK(dworst <= 1e-12);
    }
  }
}

TEST_CASE("claim monotonicity in exact mode") {
  const LatticeModel model = build_lattice(jump_market(2));
  UtilityOptions opts;
  opts.mode = SolverMode::DtConsistent;
  const auto low = jump_indicator_claim(model, 0.3);
  const auto high = jump_indicator_claim(model, 0.5);
  const UtilityResult a = solve_utility(model, low, 1.0, opts);
  const UtilityResult b = solve_utility(model, high, 1.0, opts);
  for (std::size_t k = 0; k < a.Y.size(); ++k)
    for (std::size_t i = 0; i < a.Y[k].size(); ++i) CHECK(a.Y[k][i] <= b.Y[k][i] + 1e-13);
}

TEST_CASE("truncated route documents and honors its profile") {
  const LatticeModel model = build_lattice(jump_market(2));
  UtilityOptions opts;
  opts.truncated = true;
  const UtilityResult res = solve_utility(model, jump_indicator_claim(model), 1.0, opts);
  CHECK(res.profile.k1 == doctest::Approx(0.3 * 0.3 / 2.0));
  CHECK(res.profile.k3 == doctest::Approx(0.5 + 0.3 * 0.3 / 2.0));
  BsdeSolution view;
  view.Y = res.Y;
  view.U = res.U;
  const BoundReport rep = bound_report(model, view, res.profile);
  CHECK(rep.max_y_excess <= 1e-10);
  CHECK(rep.max_u_excess <= 1e-10);
}
