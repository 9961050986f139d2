#include "bsdelab/claim.hpp"

#include <cmath>
#include <functional>

#include "bsdelab/errors.hpp"

namespace bsdelab {
namespace {

using nlohmann::json;

struct Constant final : ClaimExpr {
  double value;
  explicit Constant(double v) : value(v) {}
  double eval(const TerminalState&) const override { return value; }
};

struct Asset final : ClaimExpr {
  int index;
  explicit Asset(int i) : index(i) {}
  double eval(const TerminalState& s) const override { return s.assets[static_cast<std::size_t>(index)]; }
};

struct JumpCount final : ClaimExpr {
  int mark;  // -1: total over all marks
  explicit JumpCount(int m) : mark(m) {}
  double eval(const TerminalState& s) const override {
    if (mark >= 0) return static_cast<double>(s.jump_counts[static_cast<std::size_t>(mark)]);
    long total = 0;
    for (long c : s.jump_counts) total += c;
    return static_cast<double>(total);
  }
};

struct MarkSum final : ClaimExpr {
  int component;
  explicit MarkSum(int c) : component(c) {}
  double eval(const TerminalState& s) const override { return s.mark_sum[static_cast<std::size_t>(component)]; }
};

struct Nary final : ClaimExpr {
  enum class Kind { Add, Mul, Min, Max } kind;
  std::vector<ClaimPtr> args;
  double eval(const TerminalState& s) const override {
    double acc = args.front()->eval(s);
    for (std::size_t i = 1; i < args.size(); ++i) {
      const double v = args[i]->eval(s);
      switch (kind) {
        case Kind::Add: acc += v; break;
        case Kind::Mul: acc *= v; break;
        case Kind::Min: acc = std::min(acc, v); break;
        case Kind::Max: acc = std::max(acc, v); break;
      }
    }
    return acc;
  }
};

struct Binary final : ClaimExpr {
  enum class Kind { Sub, Ge, Gt, Le, Lt } kind;
  ClaimPtr lhs, rhs;
  double eval(const TerminalState& s) const override {
    const double a = lhs->eval(s), b = rhs->eval(s);
    switch (kind) {
      case Kind::Sub: return a - b;
      case Kind::Ge: return a >= b ? 1.0 : 0.0;
      case Kind::Gt: return a > b ? 1.0 : 0.0;
      case Kind::Le: return a <= b ? 1.0 : 0.0;
      case Kind::Lt: return a < b ? 1.0 : 0.0;
    }
    return 0.0;
  }
};

struct Scale final : ClaimExpr {
  double factor;
  ClaimPtr arg;
  double eval(const TerminalState& s) const override { return factor * arg->eval(s); }
};

struct Neg final : ClaimExpr {
  ClaimPtr arg;
  double eval(const TerminalState& s) const override { return -arg->eval(s); }
};

json require(const json& j, const char* key, const char* op) {
  if (!j.contains(key))
    throw ConfigError(std::string("claim op '") + op + "' is missing field '" + key + "'");
  return j.at(key);
}

ClaimPtr parse(const json& j, int asset_count, int mark_count) {
  if (j.is_number()) return std::make_shared<Constant>(j.get<double>());
  if (!j.is_object() || !j.contains("op"))
    throw ConfigError("claim expression must be a number or an object with an 'op' field");
  const std::string op = j.at("op").get<std::string>();

  auto parse_args = [&](const json& node) {
    std::vector<ClaimPtr> out;
    for (const auto& a : require(node, "args", op.c_str())) out.push_back(parse(a, asset_count, mark_count));
    if (out.empty()) throw ConfigError("claim op '" + op + "' needs at least one argument");
    return out;
  };

  if (op == "const") return std::make_shared<Constant>(require(j, "value", "const").get<double>());
  if (op == "asset") {
    const int idx = j.value("index", 0);
    if (idx < 0 || idx >= asset_count)
      throw ConfigError("claim op 'asset': index " + std::to_string(idx) + " out of range");
    return std::make_shared<Asset>(idx);
  }
  if (op == "jump_count") {
    const int mark = j.value("mark", -1);
    if (mark >= mark_count)
      throw ConfigError("claim op 'jump_count': mark " + std::to_string(mark) + " out of range");
    return std::make_shared<JumpCount>(mark);
  }
  if (op == "mark_sum") {
    const int comp = j.value("component", 0);
    if (comp < 0) throw ConfigError("claim op 'mark_sum': negative component");
    return std::make_shared<MarkSum>(comp);
  }
  if (op == "scale") {
    auto node = std::make_shared<Scale>();
    node->factor = require(j, "factor", "scale").get<double>();
    node->arg = parse(require(j, "arg", "scale"), asset_count, mark_count);
    return node;
  }
  if (op == "neg") {
    auto node = std::make_shared<Neg>();
    node->arg = parse(require(j, "arg", "neg"), asset_count, mark_count);
    return node;
  }
  if (op == "add" || op == "mul" || op == "min" || op == "max") {
    auto node = std::make_shared<Nary>();
    node->kind = op == "add"   ? Nary::Kind::Add
                 : op == "mul" ? Nary::Kind::Mul
                 : op == "min" ? Nary::Kind::Min
                               : Nary::Kind::Max;
    node->args = parse_args(j);
    return node;
  }
  if (op == "sub" || op == "ge" || op == "gt" || op == "le" || op == "lt") {
    auto node = std::make_shared<Binary>();
    node->kind = op == "sub"  ? Binary::Kind::Sub
                 : op == "ge" ? Binary::Kind::Ge
                 : op == "gt" ? Binary::Kind::Gt
                 : op == "le" ? Binary::Kind::Le
                              : Binary::Kind::Lt;
    node->lhs = parse(require(j, "lhs", op.c_str()), asset_count, mark_count);
    node->rhs = parse(require(j, "rhs", op.c_str()), asset_count, mark_count);
    return node;
  }
  throw ConfigError("unknown claim op '" + op + "'");
}

}  // namespace

ClaimPtr parse_claim(const nlohmann::json& j, int asset_count, int mark_count) {
  return parse(j, asset_count, mark_count);
}

ClaimPtr claim_constant(double c) { return std::make_shared<Constant>(c); }

ClaimPtr claim_asset(int index) { return std::make_shared<Asset>(index); }

ClaimPtr claim_jump_indicator(double scale, long threshold) {
  auto ind = std::make_shared<Binary>();
  ind->kind = Binary::Kind::Ge;
  ind->lhs = std::make_shared<JumpCount>(-1);
  ind->rhs = std::make_shared<Constant>(static_cast<double>(threshold));
  auto s = std::make_shared<Scale>();
  s->factor = scale;
  s->arg = ind;
  return s;
}

ClaimPtr claim_sum(ClaimPtr a, ClaimPtr b) {
  auto node = std::make_shared<Nary>();
  node->kind = Nary::Kind::Add;
  node->args = {std::move(a), std::move(b)};
  return node;
}

ClaimPtr claim_scale(double factor, ClaimPtr a) {
  auto s = std::make_shared<Scale>();
  s->factor = factor;
  s->arg = std::move(a);
  return s;
}

int claim_dependence(const nlohmann::json& j) {
  if (j.is_number() || j.is_null()) return 0;
  if (!j.is_object() || !j.contains("op")) return 0;
  const std::string op = j.at("op").get<std::string>();
  if (op == "const") return 0;
  if (op == "asset") return 1;
  if (op == "jump_count" || op == "mark_sum") return 2;
  int dep = 0;
  for (const char* key : {"arg", "lhs", "rhs"})
    if (j.contains(key)) dep |= claim_dependence(j.at(key));
  if (j.contains("args"))
    for (const auto& a : j.at("args")) dep |= claim_dependence(a);
  return dep;
}

bool claim_separable(const nlohmann::json& j) {
  const int dep = claim_dependence(j);
  if (dep != 3) return true;
  if (!j.is_object() || !j.contains("op")) return false;
  const std::string op = j.at("op").get<std::string>();
  if (op == "scale" || op == "neg") return claim_separable(j.at("arg"));
  if (op == "add") {
    for (const auto& a : j.at("args"))
      if (!claim_separable(a)) return false;
    return true;
  }
  if (op == "sub") return claim_separable(j.at("lhs")) && claim_separable(j.at("rhs"));
  return false;
}

}  // namespace bsdelab
