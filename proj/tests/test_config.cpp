#include <doctest.h>

#include <fstream>

#include "bsdelab/config.hpp"

using namespace bsdelab;
using nlohmann::json;

namespace {
const std::string kConfigDir = BSDELAB_CONFIG_DIR;
}

TEST_CASE("bundled two-step scenario parses and evaluates") {
  const RunConfig cfg = load_config(kConfigDir + "/jump_claim.json");
  CHECK(cfg.model.grid.step_count == 2);
  CHECK(cfg.model.grid.horizon == 1.0);
  CHECK(cfg.model.marks.count() == 1);
  CHECK(cfg.solver.alpha == 1.0);
  CHECK(cfg.experiment.alpha_grid.size() == 4);
  REQUIRE(cfg.claim != nullptr);
  const LatticeModel model = build_lattice(cfg.model);
  const auto leaves = claim_leaves(model, cfg);
  // Jump mass per step is 0.5 * 0.4 * 0.5 = 0.1.
  CHECK(model.kappa_at(0, 0)[1] == doctest::Approx(0.1).epsilon(1e-15));
  double lo = 1.0, hi = 0.0;
  for (double v : leaves) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == 0.0);
  CHECK(hi == 0.5);
}

TEST_CASE("missing keys are named") {
  CHECK_THROWS_WITH_AS(load_config(kConfigDir + "/bad_missing_horizon.json"),
                       doctest::Contains("model.horizon"), ConfigError);
  json doc = {{"schema_version", 1}};
  CHECK_THROWS_WITH_AS(parse_config(doc), doctest::Contains("'model'"), ConfigError);
}

TEST_CASE("schema version and enumerations are validated") {
  json doc = json::parse(R"({"schema_version": 2, "model": {}})");
  CHECK_THROWS_WITH_AS(parse_config(doc), doctest::Contains("schema_version"), ConfigError);
  RunConfig good = load_config(kConfigDir + "/jump_claim.json");
  (void)good;
  json bad_mode = json::parse(R"({
    "schema_version": 1,
    "model": {"horizon": 1.0, "steps": 1, "initial_price": [1.0],
              "market_price_of_risk": {"kind": "constant", "value": [0.0]},
              "volatility": {"kind": "constant", "value": [[0.2]]}},
    "solver": {"mode": "implicit-midpoint"}
  })");
  CHECK_THROWS_WITH_AS(parse_config(bad_mode), doctest::Contains("solver.mode"), ConfigError);
  json bad_kind = json::parse(R"({
    "schema_version": 1,
    "model": {"horizon": 1.0, "steps": 1, "initial_price": [1.0],
              "market_price_of_risk": {"kind": "detrended", "value": [0.0]},
              "volatility": {"kind": "constant", "value": [[0.2]]}}
  })");
  CHECK_THROWS_WITH_AS(parse_config(bad_kind), doctest::Contains("constant/regime/self_exciting"),
                       ConfigError);
}

TEST_CASE("claim expressions reject unknown ops and bad indices") {
  json doc = json::parse(R"({
    "schema_version": 1,
    "model": {"horizon": 1.0, "steps": 1, "initial_price": [1.0],
              "market_price_of_risk": {"kind": "constant", "value": [0.0]},
              "volatility": {"kind": "constant", "value": [[0.2]]}},
    "claim": {"op": "log_payoff"}
  })");
  CHECK_THROWS_WITH_AS(parse_config(doc), doctest::Contains("log_payoff"), ConfigError);
  doc["claim"] = {{"op", "asset"}, {"index", 3}};
  CHECK_THROWS_WITH_AS(parse_config(doc), doctest::Contains("out of range"), ConfigError);
}

TEST_CASE("claim structure analysis") {
  const json asset = {{"op", "asset"}, {"index", 0}};
  const json jumps = {{"op", "jump_count"}};
  CHECK(claim_dependence(asset) == 1);
  CHECK(claim_dependence(jumps) == 2);
  json sum;
  sum["op"] = "add";
  sum["args"] = {asset, jumps};
  CHECK(claim_dependence(sum) == 3);
  CHECK(claim_separable(sum));
  json prod;
  prod["op"] = "mul";
  prod["args"] = {asset, jumps};
  CHECK(claim_dependence(prod) == 3);
  CHECK(!claim_separable(prod));
  json scaled;
  scaled["op"] = "scale";
  scaled["factor"] = 2.0;
  scaled["arg"] = sum;
  CHECK(claim_separable(scaled));
}

TEST_CASE("generator selection for the generic solve") {
  json doc = json::parse(R"({
    "schema_version": 1,
    "model": {"horizon": 1.0, "steps": 2, "initial_price": [1.0],
              "market_price_of_risk": {"kind": "constant", "value": [0.1]},
              "volatility": {"kind": "constant", "value": [[0.2]]}},
    "solver": {"generator": {"kind": "affine", "constant": 0.2, "value_slope": 0.5}}
  })");
  const RunConfig cfg = parse_config(doc);
  const GeneratorSpec gen = make_generator(cfg.solver);
  CHECK(gen.kind() == GeneratorSpec::Kind::LipschitzAffine);
  // f = 0.2 + 0.5 y with zero data: Y accrues the fixed point of the step map.
  const LatticeModel model = build_lattice(cfg.model);
  const LatticeMeasure frame(model, DriverKind::Physical);
  const auto sol = solve_bsde(model, frame, gen,
                              std::vector<double>(static_cast<std::size_t>(model.nodes_at(2)), 0.0), {});
  // One implicit step: y = (0 + 0.2*dt)/(1 - 0.5*dt), then once more.
  const double dt = 0.5;
  const double y1 = 0.2 * dt / (1.0 - 0.5 * dt);
  const double y0 = (y1 + 0.2 * dt) / (1.0 - 0.5 * dt);
  CHECK(sol.y0() == doctest::Approx(y0).epsilon(1e-10));

  doc["solver"]["generator"] = {{"kind", "sinusoidal"}};
  CHECK_THROWS_WITH_AS(parse_config(doc), doctest::Contains("entropic/zero/affine"), ConfigError);
}

TEST_CASE("config hash is stable") {
  const RunConfig a = load_config(kConfigDir + "/jump_claim.json");
  const RunConfig b = load_config(kConfigDir + "/jump_claim.json");
  CHECK(!a.config_hash.empty());
  CHECK(a.config_hash == b.config_hash);
  const RunConfig c = load_config(kConfigDir + "/closed_form.json");
  CHECK(a.config_hash != c.config_hash);
}

TEST_CASE("every bundled scenario builds") {
  for (const char* name :
       {"closed_form.json", "jump_claim.json", "diffusion_claim.json", "asymptotics.json",
        "refinement.json", "regime.json", "insurance.json"}) {
    const RunConfig cfg = load_config(kConfigDir + "/" + name);
    const LatticeModel model = build_lattice(cfg.model);
    CHECK(model.validate().passed);
  }
}
