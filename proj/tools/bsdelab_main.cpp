// Command-line front end: one command per invocation, CSV results plus a JSON
// manifest in the output directory. Exit codes: 0 success, 1 verification
// failure, 2 configuration error, 3 numerical failure.

#include <chrono>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "bsdelab/config.hpp"
#include "bsdelab/csvio.hpp"
#include "bsdelab/indifference.hpp"
#include "bsdelab/oracles.hpp"
#include "bsdelab/verify.hpp"

namespace {

using namespace bsdelab;

std::string mode_name(SolverMode mode) {
  switch (mode) {
    case SolverMode::EulerHat: return "euler";
    case SolverMode::EulerPhysical: return "euler-physical";
    case SolverMode::DtConsistent: return "dt-consistent";
  }
  return "euler";
}

/// Splits a node-major vector field into per-component node fields.
std::vector<std::vector<std::vector<double>>> split_components(
    const std::vector<std::vector<double>>& field, int dims) {
  std::vector<std::vector<std::vector<double>>> out(static_cast<std::size_t>(dims));
  for (int i = 0; i < dims; ++i) {
    out[static_cast<std::size_t>(i)].resize(field.size());
    for (std::size_t k = 0; k < field.size(); ++k) {
      const std::size_t n = field[k].size() / static_cast<std::size_t>(dims);
      out[static_cast<std::size_t>(i)][k].resize(n);
      for (std::size_t node = 0; node < n; ++node)
        out[static_cast<std::size_t>(i)][k][node] = field[k][node * static_cast<std::size_t>(dims) + i];
    }
  }
  return out;
}

std::vector<std::pair<std::string, const std::vector<std::vector<double>>*>> component_columns(
    const std::string& prefix, const std::vector<std::vector<std::vector<double>>>& parts) {
  std::vector<std::pair<std::string, const std::vector<std::vector<double>>*>> cols;
  for (std::size_t i = 0; i < parts.size(); ++i)
    cols.emplace_back(prefix + std::to_string(i), &parts[i]);
  return cols;
}

int run_command(const std::string& command, RunConfig& cfg, const std::string& config_path,
                const std::string& out_dir, bool with_oracle) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto t0 = std::chrono::steady_clock::now();

  const LatticeModel model = build_lattice(cfg.model);
  const auto claim = claim_leaves(model, cfg);

  ManifestInfo manifest;
  manifest.command = command;
  manifest.config_path = config_path;
  manifest.config_hash = cfg.config_hash;
  manifest.mode = mode_name(cfg.solver.mode);
  manifest.tolerance = cfg.solver.solve.tol;
  manifest.alpha = cfg.solver.alpha;
  manifest.total_nodes = model.total_nodes();

  int exit_code = 0;

  if (command == "solve") {
    // Generic backward solve of the configured claim with the configured
    // driver, in the drift-free frame (or the physical one for that mode).
    const GeneratorSpec gen = make_generator(cfg.solver);
    const bool physical = cfg.solver.mode == SolverMode::EulerPhysical;
    const LatticeMeasure frame =
        physical ? LatticeMeasure(model, DriverKind::Physical)
                 : LatticeMeasure(model, minimal_martingale_measure(model), DriverKind::DriftAdjusted);
    SolveOptions sopts = cfg.solver.solve;
    if (cfg.solver.truncated) {
      double claim_bound = 0.0;
      for (double v : claim) claim_bound = std::max(claim_bound, std::fabs(v));
      sopts.truncated = true;
      sopts.profile = gen.growth_profile(claim_bound + model.config().grid.horizon *
                                                           model.max_phi_norm() * model.max_phi_norm() /
                                                           (2.0 * cfg.solver.alpha),
                                         model.max_phi_norm());
    }
    const BsdeSolution sol = solve_bsde(model, frame, gen, claim, sopts);
    write_solution_csv(out_dir + "/solution.csv", model, sol.Y, sol.Z, sol.U);
    manifest.extra["generator"] = gen.label();
    manifest.extra["y0"] = sol.y0();
    manifest.extra["picard_iterations"] = sol.max_picard_iterations;
  } else if (command == "utility") {
    UtilityOptions opts;
    opts.mode = cfg.solver.mode;
    opts.solve = cfg.solver.solve;
    opts.dp.threads = cfg.solver.solve.threads;
    opts.truncated = cfg.solver.truncated;
    const UtilityResult res = solve_utility(model, claim, cfg.solver.alpha, opts);
    write_solution_csv(out_dir + "/solution.csv", model, res.Y, res.Z, res.U);
    std::vector<std::vector<double>> value(res.Y.size());
    for (std::size_t k = 0; k < res.Y.size(); ++k) {
      value[k].resize(res.Y[k].size());
      for (std::size_t i = 0; i < res.Y[k].size(); ++i)
        value[k][i] = value_function(0.0, res.Y[k][i], cfg.solver.alpha);
    }
    const auto theta_parts = split_components(res.theta, model.assets());
    write_node_field_csv(out_dir + "/strategy.csv", model, component_columns("theta", theta_parts));
    write_node_field_csv(out_dir + "/value.csv", model, {{"V", &value}});
    write_density_csv(out_dir + "/dual_density.csv", model, res.dual);
    const DualityReport dual = duality_report(model, res, claim);
    manifest.extra["measure"] = res.dual.label;
    manifest.extra["y0"] = res.y0();
    manifest.extra["value0"] = value_function(0.0, res.y0(), cfg.solver.alpha);
    manifest.extra["dual_objective"] = dual.dual_value;
    manifest.extra["duality_gap"] = dual.gap;
    manifest.extra["dual_martingale_residual"] = dual.martingale_residual;
    if (with_oracle) {
      const LatticeMeasure pframe(model, DriverKind::DriftAdjusted);
      const DpSolution bf = brute_force_primal(model, pframe, claim, cfg.solver.alpha);
      manifest.extra["oracle_y0"] = bf.y0();
      manifest.extra["oracle_gap"] = res.y0() - bf.y0();
    }
  } else if (command == "indifference") {
    IndifferenceOptions opts;
    opts.mode = cfg.solver.mode;
    opts.solve = cfg.solver.solve;
    opts.dp.threads = cfg.solver.solve.threads;
    opts.route = IndifferenceRoute::TwoRun;
    const IndifferenceResult two = indifference_solve(model, claim, cfg.solver.alpha, opts);
    opts.route = IndifferenceRoute::Direct;
    const IndifferenceResult direct = indifference_solve(model, claim, cfg.solver.alpha, opts);
    write_node_field_csv(out_dir + "/indifference_value.csv", model, {{"pi", &two.pi}});
    const auto psi_parts = split_components(two.psi, model.assets());
    write_node_field_csv(out_dir + "/hedge.csv", model, component_columns("psi", psi_parts));
    write_density_csv(out_dir + "/entropy_density.csv", model, two.entropy_measure);
    double route_gap = 0.0;
    for (std::size_t k = 0; k < two.pi.size(); ++k)
      for (std::size_t i = 0; i < two.pi[k].size(); ++i)
        route_gap = std::max(route_gap, std::fabs(two.pi[k][i] - direct.pi[k][i]));
    manifest.extra["measure"] = two.entropy_measure.label;
    manifest.extra["pi0"] = two.pi0();
    manifest.extra["route_gap"] = route_gap;
  } else if (command == "asymptotics") {
    const AsymptoticsReport rep =
        asymptotics_sweep(model, claim, cfg.experiment.alpha_grid, SolverMode::DtConsistent);
    write_asymptotics_csv(out_dir + "/asymptotics.csv", rep);
    manifest.extra["sup_slope"] = rep.sup_slope;
    manifest.extra["z_slope"] = rep.z_slope;
    manifest.extra["u_slope"] = rep.u_slope;
  } else if (command == "oracle") {
    const LatticeMeasure pframe(model, DriverKind::DriftAdjusted);
    const DpSolution rec = entropic_recursion(model, pframe, claim, cfg.solver.alpha);
    const DpSolution bf = brute_force_primal(model, pframe, claim, cfg.solver.alpha);
    write_node_field_csv(out_dir + "/oracle_value.csv", model, {{"y", &bf.Y}});
    manifest.extra["recursion_y0"] = rec.y0();
    manifest.extra["brute_force_y0"] = bf.y0();
    manifest.extra["oracle_agreement"] = std::fabs(rec.y0() - bf.y0());
  } else if (command == "verify") {
    const VerifySummary summary = run_verification(cfg);
    print_table(std::cout, summary);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& c : summary.checks)
      rows.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"bound", c.tolerance}});
    manifest.extra["checks"] = rows;
    if (!summary.all_passed()) exit_code = 1;
  } else {
    std::cerr << "unknown command '" << command << "'\n";
    return 2;
  }

  manifest.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(out_dir + "/manifest.json", manifest);
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact lattice laboratory for jump-diffusion hedging equations"};
  std::string config_path, out_dir = "out", command = "verify";
  std::vector<double> alphas;
  std::string mode;
  double tol = -1.0;
  int threads = 0;
  bool with_oracle = false;
  app.add_option("--config", config_path, "path to the JSON configuration")->required();
  app.add_option("--command", command, "solve | utility | indifference | asymptotics | verify | oracle");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--alpha", alphas, "risk-aversion override (first value) / sweep grid");
  app.add_option("--mode", mode, "euler | euler-physical | dt-consistent");
  app.add_option("--tol", tol, "solver tolerance override");
  app.add_option("--threads", threads, "worker threads for per-slice loops");
  app.add_flag("--oracle", with_oracle, "also run the brute-force cross-check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (!alphas.empty()) {
      cfg.solver.alpha = alphas.front();
      cfg.experiment.alpha_grid = alphas;
    }
    if (!mode.empty()) {
      if (mode == "euler")
        cfg.solver.mode = SolverMode::EulerHat;
      else if (mode == "euler-physical")
        cfg.solver.mode = SolverMode::EulerPhysical;
      else if (mode == "dt-consistent")
        cfg.solver.mode = SolverMode::DtConsistent;
      else
        throw ConfigError("unknown --mode '" + mode + "'");
    }
    if (tol > 0.0) cfg.solver.solve.tol = tol;
    if (threads > 0) cfg.solver.solve.threads = threads;
    return run_command(command, cfg, config_path, out_dir, with_oracle);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
