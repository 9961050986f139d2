#pragma once

// JSON configuration: one document describes the market model, the claim, the
// solver settings and the experiment parameters. See docs/config_schema.md.

#include <string>
#include <vector>

#include <json.hpp>

#include "bsdelab/claim.hpp"
#include "bsdelab/lattice.hpp"
#include "bsdelab/utility.hpp"

namespace bsdelab {

struct SolverSettings {
  double alpha = 1.0;
  SolverMode mode = SolverMode::EulerHat;
  SolveOptions solve{};
  bool truncated = false;
  // Driver used by the generic `solve` command.
  enum class Driver { Entropic, Zero, Affine } driver = Driver::Entropic;
  double affine_a = 0.0, affine_b = 0.0, affine_d = 0.0;
  std::vector<double> affine_c;
};

/// Driver instance for the generic solve pipeline.
GeneratorSpec make_generator(const SolverSettings& settings);

struct ExperimentSettings {
  std::vector<double> alpha_grid{0.5, 0.25, 0.125, 0.0625};
  std::vector<double> stability_deltas{1e-2, 1e-3};
  std::vector<int> refinement_steps{4, 8, 16, 32};
  double dual_grid_ratio = 1.02;
  double dual_grid_exponent = 4.0;
};

struct RunConfig {
  int schema_version = 1;
  ModelConfig model;
  nlohmann::json claim_json;  // kept verbatim for re-instantiation
  ClaimPtr claim;             // null means zero claim
  SolverSettings solver;
  ExperimentSettings experiment;
  std::string config_hash;    // FNV-1a of the document bytes
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

/// Leaf payoff vector for the configured claim (zeros when absent).
std::vector<double> claim_leaves(const LatticeModel& model, const RunConfig& cfg);

}  // namespace bsdelab
