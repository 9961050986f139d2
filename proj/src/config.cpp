#include "bsdelab/config.hpp"

#include <fstream>
#include <sstream>

namespace bsdelab {
namespace {

using nlohmann::json;

const json& require(const json& j, const char* key, const std::string& scope) {
  if (!j.contains(key)) throw ConfigError("config missing key '" + scope + key + "'");
  return j.at(key);
}

std::vector<double> number_list(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(what + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<double> flatten_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a matrix (array of rows)");
  std::vector<double> out;
  for (const auto& row : j)
    for (const auto& v : number_list(row, what)) out.push_back(v);
  return out;
}

CoefficientSpec parse_coefficient(const json& j, const std::string& scope, bool matrix) {
  CoefficientSpec spec;
  const std::string kind = require(j, "kind", scope).get<std::string>();
  if (kind == "constant") {
    spec.kind = CoefficientSpec::Kind::Constant;
    const json& v = require(j, "value", scope);
    spec.values.push_back(matrix ? flatten_matrix(v, scope + "value") : number_list(v, scope + "value"));
  } else if (kind == "regime") {
    spec.kind = CoefficientSpec::Kind::Regime;
    for (const auto& row : require(j, "values", scope))
      spec.values.push_back(matrix ? flatten_matrix(row, scope + "values")
                                   : number_list(row, scope + "values"));
    if (spec.values.empty()) throw ConfigError(scope + "values must be non-empty");
  } else if (kind == "self_exciting") {
    spec.kind = CoefficientSpec::Kind::SelfExciting;
    spec.base = number_list(require(j, "base", scope), scope + "base");
    spec.slope = number_list(require(j, "slope", scope), scope + "slope");
    spec.cap = number_list(require(j, "cap", scope), scope + "cap");
  } else {
    throw ConfigError(scope + "kind '" + kind + "' is not one of constant/regime/self_exciting");
  }
  return spec;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  cfg.schema_version = require(doc, "schema_version", "").get<int>();
  if (cfg.schema_version != 1)
    throw ConfigError("unsupported schema_version " + std::to_string(cfg.schema_version));

  const json& model = require(doc, "model", "");
  cfg.model.grid.horizon = require(model, "horizon", "model.").get<double>();
  cfg.model.grid.step_count = require(model, "steps", "model.").get<int>();
  cfg.model.asset_count = model.value("assets", 1);
  cfg.model.initial_price = number_list(require(model, "initial_price", "model."), "model.initial_price");
  cfg.model.phi = parse_coefficient(require(model, "market_price_of_risk", "model."),
                                    "model.market_price_of_risk.", false);
  cfg.model.sigma = parse_coefficient(require(model, "volatility", "model."), "model.volatility.", true);
  if (model.contains("marks")) {
    for (const auto& mj : model.at("marks")) {
      Mark mk;
      mk.label = mj.value("label", "mark");
      mk.vector = number_list(require(mj, "vector", "model.marks[]."), "model.marks[].vector");
      mk.weight = require(mj, "weight", "model.marks[].").get<double>();
      cfg.model.marks.marks.push_back(std::move(mk));
    }
  }
  if (cfg.model.marks.count() > 0)
    cfg.model.zeta = parse_coefficient(require(model, "compensator", "model."), "model.compensator.", false);
  if (model.contains("regimes")) {
    cfg.model.regime_count = require(model.at("regimes"), "count", "model.regimes.").get<int>();
    cfg.model.initial_regime = model.at("regimes").value("initial", 0);
  }
  cfg.model.node_budget = model.value("node_budget", 10'000'000L);
  cfg.model.c_nu = model.value("compensator_bound", 0.0);

  if (doc.contains("claim") && !doc.at("claim").is_null()) {
    cfg.claim_json = doc.at("claim");
    cfg.claim = parse_claim(cfg.claim_json, cfg.model.asset_count, cfg.model.marks.count());
  }

  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    cfg.solver.alpha = s.value("alpha", 1.0);
    const std::string mode = s.value("mode", "euler");
    if (mode == "euler")
      cfg.solver.mode = SolverMode::EulerHat;
    else if (mode == "euler-physical")
      cfg.solver.mode = SolverMode::EulerPhysical;
    else if (mode == "dt-consistent")
      cfg.solver.mode = SolverMode::DtConsistent;
    else
      throw ConfigError("solver.mode '" + mode + "' is not one of euler/euler-physical/dt-consistent");
    cfg.solver.solve.tol = s.value("tolerance", 1e-12);
    cfg.solver.solve.max_iterations = s.value("max_iterations", 200);
    cfg.solver.solve.implicit_step = s.value("implicit", true);
    cfg.solver.solve.threads = s.value("threads", 1);
    cfg.solver.truncated = s.value("truncated", false);
    if (s.contains("generator")) {
      const json& g = s.at("generator");
      const std::string kind = require(g, "kind", "solver.generator.").get<std::string>();
      if (kind == "entropic")
        cfg.solver.driver = SolverSettings::Driver::Entropic;
      else if (kind == "zero")
        cfg.solver.driver = SolverSettings::Driver::Zero;
      else if (kind == "affine") {
        cfg.solver.driver = SolverSettings::Driver::Affine;
        cfg.solver.affine_a = g.value("constant", 0.0);
        cfg.solver.affine_b = g.value("value_slope", 0.0);
        cfg.solver.affine_d = g.value("jump_slope", 0.0);
        if (g.contains("gain_slope"))
          cfg.solver.affine_c = number_list(g.at("gain_slope"), "solver.generator.gain_slope");
      } else {
        throw ConfigError("solver.generator.kind '" + kind + "' is not one of entropic/zero/affine");
      }
    }
  }

  if (doc.contains("experiment")) {
    const json& e = doc.at("experiment");
    if (e.contains("alpha_grid")) cfg.experiment.alpha_grid = number_list(e.at("alpha_grid"), "experiment.alpha_grid");
    if (e.contains("stability_deltas"))
      cfg.experiment.stability_deltas = number_list(e.at("stability_deltas"), "experiment.stability_deltas");
    if (e.contains("refinement_steps")) {
      cfg.experiment.refinement_steps.clear();
      for (const auto& v : e.at("refinement_steps")) cfg.experiment.refinement_steps.push_back(v.get<int>());
    }
    if (e.contains("dual_grid")) {
      cfg.experiment.dual_grid_ratio = e.at("dual_grid").value("ratio", 1.02);
      cfg.experiment.dual_grid_exponent = e.at("dual_grid").value("max_exponent", 4.0);
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  RunConfig cfg = parse_config(doc);
  cfg.config_hash = fnv1a_hex(bytes);
  return cfg;
}

std::vector<double> claim_leaves(const LatticeModel& model, const RunConfig& cfg) {
  if (!cfg.claim) return std::vector<double>(static_cast<std::size_t>(model.nodes_at(model.steps())), 0.0);
  return model.evaluate_claim(*cfg.claim);
}

GeneratorSpec make_generator(const SolverSettings& settings) {
  switch (settings.driver) {
    case SolverSettings::Driver::Zero:
      return GeneratorSpec::zero();
    case SolverSettings::Driver::Affine:
      return GeneratorSpec::lipschitz_affine(settings.affine_a, settings.affine_b,
                                             settings.affine_c, settings.affine_d);
    case SolverSettings::Driver::Entropic:
      break;
  }
  return settings.mode == SolverMode::EulerPhysical
             ? GeneratorSpec::entropic_physical(settings.alpha)
             : GeneratorSpec::entropic(settings.alpha);
}

}  // namespace bsdelab
