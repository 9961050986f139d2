#include <doctest.h>

#include <cmath>
#include <random>

#include "bsdelab/lattice.hpp"
#include "test_models.hpp"

using namespace bsdelab;
using namespace bsdelab::testing;

TEST_CASE("one-step binomial leaves") {
  const LatticeModel model = build_lattice(two_leaf());
  REQUIRE(model.nodes_at(1) == 2);
  // Branch 0 is the down sign pattern, branch 1 up.
  CHECK(model.slice(1).assets[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(model.slice(1).assets[1] == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(model.branch_probability(0, 0, 0) == 0.5);
  CHECK(model.branch_probability(0, 0, 1) == 0.5);
}

TEST_CASE("diffusion crossed with one mark gives four leaves") {
  const LatticeModel model = build_lattice(one_step_jump());
  REQUIRE(model.branching() == 4);
  REQUIRE(model.nodes_at(1) == 4);
  double jump_mass = 0.0;
  for (int b = 0; b < 4; ++b) {
    const double p = model.branch_probability(0, 0, b);
    if (model.branch_jump(b) == 1) {
      CHECK(p == doctest::Approx(0.05).epsilon(1e-15));  // 0.5 * 0.1
      jump_mass += p;
    } else {
      CHECK(p == doctest::Approx(0.45).epsilon(1e-15));
    }
    // The jump branch leaves the asset unchanged relative to its diffusion twin.
    const int w = model.branch_diffusion(b);
    const long twin = w * model.jump_branches();
    CHECK(model.slice(1).assets[static_cast<std::size_t>(b)] ==
          model.slice(1).assets[static_cast<std::size_t>(twin)]);
  }
  CHECK(jump_mass == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("validation reports exact martingale residuals") {
  ModelConfig cfg = jump_market(3);
  cfg.marks.marks.push_back({"second", {2.0}, 0.1});
  cfg.zeta.values = {{1.0, 0.8}};
  const LatticeModel model = build_lattice(cfg);
  const ValidationReport rep = model.validate();
  CHECK(rep.passed);
  CHECK(rep.max_probability_sum_error <= 1e-15);
  CHECK(rep.max_brownian_mean_residual <= 1e-15);
  CHECK(rep.max_jump_mean_residual <= 1e-15);
  CHECK(rep.min_branch_probability > 0.0);
  CHECK(rep.min_asset_price > 0.0);
  CHECK(rep.realized_c_nu == doctest::Approx(1.0));
}

TEST_CASE("regime switching modulates volatility by accumulated jumps") {
  ModelConfig cfg = jump_market(3, 0.2, 0.2, 0.3);
  cfg.sigma.kind = CoefficientSpec::Kind::Regime;
  cfg.sigma.values = {{0.2}, {0.4}};
  cfg.regime_count = 2;
  const LatticeModel model = build_lattice(cfg);
  for (int k = 0; k < model.steps(); ++k)
    for (long node = 0; node < model.nodes_at(k); ++node) {
      long jumps = 0;
      for (int j = 0; j < model.mark_count(); ++j)
        jumps += model.slice(k).jump_counts[static_cast<std::size_t>(node) * model.mark_count() + j];
      const double expected = (jumps % 2 == 0) ? 0.2 : 0.4;
      CHECK(model.sigma_at(k, node)[0] == expected);
      CHECK(model.slice(k).regime[static_cast<std::size_t>(node)] == jumps % 2);
    }
  // Asset updates must use the node's regime volatility, path by path.
  for (long node = 0; node < model.nodes_at(1); ++node) {
    const double s1 = model.slice(1).assets[static_cast<std::size_t>(node)];
    const int b = static_cast<int>(node);
    const double dw = model.brownian_increment(model.branch_diffusion(b), 0);
    CHECK(s1 == doctest::Approx(1.0 * (1.0 + 0.2 * (0.2 * model.dt() + dw))).epsilon(1e-15));
  }
}

TEST_CASE("excess jump mass is rejected naming the no-jump branch") {
  ModelConfig cfg = one_step_jump();
  cfg.zeta.values = {{1.2}};
  cfg.marks.marks[0].weight = 1.0;  // zeta*lambda*dt = 1.2
  CHECK_THROWS_WITH_AS(build_lattice(cfg), doctest::Contains("no-jump branch nonpositive"),
                       ModelError);
}

TEST_CASE("drift step bound is enforced with the node named") {
  ModelConfig cfg = two_leaf();
  cfg.phi.values = {{1.5}};  // |phi| sqrt(dt) = 1.5 >= 1
  CHECK_THROWS_WITH_AS(build_lattice(cfg), doctest::Contains("step-size violation"), ModelError);
}

TEST_CASE("singular volatility is rejected") {
  ModelConfig cfg = two_asset(1);
  cfg.sigma.values = {{0.2, 0.1, 0.4, 0.2}};  // rank one
  CHECK_THROWS_AS(build_lattice(cfg), ModelError);
}

TEST_CASE("node budget rejects oversized trees") {
  ModelConfig cfg = jump_market(32);
  CHECK_THROWS_WITH_AS(build_lattice(cfg), doctest::Contains("node budget"), ConfigError);
}

TEST_CASE("strategy bijection") {
  SUBCASE("zero maps to zero") {
    const LatticeModel model = build_lattice(two_leaf());
    const std::vector<double> zero{0.0};
    CHECK(model.theta_of_shares(0, 0, zero)[0] == 0.0);
  }
  SUBCASE("scalar example") {
    ModelConfig cfg = two_leaf();
    cfg.initial_price = {2.0};
    cfg.sigma.values = {{0.3}};
    const LatticeModel model = build_lattice(cfg);
    const std::vector<double> shares{5.0};
    CHECK(model.theta_of_shares(0, 0, shares)[0] == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(model.shares_of_theta(0, 0, std::vector<double>{3.0})[0] ==
          doctest::Approx(5.0).epsilon(1e-15));
  }
  SUBCASE("two assets round trip") {
    const LatticeModel model = build_lattice(two_asset(2));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 32; ++trial) {
      const int k = static_cast<int>(rng() % 2);
      const long node = static_cast<long>(rng() % static_cast<std::uint64_t>(model.nodes_at(k)));
      std::vector<double> shares{u(rng), u(rng)};
      const auto theta = model.theta_of_shares(k, node, shares);
      const auto back = model.shares_of_theta(k, node, theta);
      CHECK(std::fabs(back[0] - shares[0]) <= 1e-12);
      CHECK(std::fabs(back[1] - shares[1]) <= 1e-12);
    }
  }
}

TEST_CASE("self-exciting compensator grows with the loss count and respects the cap") {
  ModelConfig cfg = jump_market(3, 0.2, 0.2, 0.5);
  cfg.zeta.kind = CoefficientSpec::Kind::SelfExciting;
  cfg.zeta.base = {0.4};
  cfg.zeta.slope = {0.5};
  cfg.zeta.cap = {0.5};
  const LatticeModel model = build_lattice(cfg);
  for (int k = 0; k < model.steps(); ++k)
    for (long node = 0; node < model.nodes_at(k); ++node) {
      const long jumps = model.slice(k).jump_counts[static_cast<std::size_t>(node)];
      const double expected = std::min(0.4 * (1.0 + 0.5 * static_cast<double>(jumps)), 0.5);
      CHECK(model.slice(k).zeta[static_cast<std::size_t>(node)] == doctest::Approx(expected));
    }
  CHECK(model.validate().realized_c_nu <= 0.5 + 1e-15);
}

TEST_CASE("terminal state decodes jump counts and mark sums") {
  ModelConfig cfg = jump_market(2);
  cfg.marks.marks[0].vector = {1.5};
  const LatticeModel model = build_lattice(cfg);
  // Path: jump in step one (branch j=1), none in step two.
  const int B = model.branching();
  const long node = 1L * B + 0;  // first step branch 1 = (w=0, j=1), then branch 0
  const TerminalState st = model.state_at(2, node);
  CHECK(st.jump_counts[0] == 1);
  CHECK(st.mark_sum[0] == doctest::Approx(1.5));
  CHECK(model.path_string(2, node).find("j1") != std::string::npos);
}
