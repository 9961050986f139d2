#include "bsdelab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bsdelab/linalg.hpp"

namespace bsdelab {
namespace {

void check_config(const ModelConfig& c) {
  if (c.grid.step_count < 1) throw ConfigError("step_count must be >= 1");
  if (!(c.grid.horizon > 0.0)) throw ConfigError("horizon must be > 0");
  if (c.asset_count < 1) throw ConfigError("asset_count must be >= 1");
  if (c.asset_count > 16) throw ConfigError("asset_count too large for sign-pattern branching");
  if (static_cast<int>(c.initial_price.size()) != c.asset_count)
    throw ConfigError("initial_price must have one entry per asset");
  for (double s : c.initial_price)
    if (!(s > 0.0)) throw ConfigError("initial_price entries must be > 0");
  for (const auto& mk : c.marks.marks) {
    if (mk.weight < 0.0) throw ConfigError("mark weight must be >= 0");
    bool nonzero = false;
    for (double e : mk.vector) nonzero = nonzero || e != 0.0;
    if (!nonzero) throw ConfigError("mark vector must be nonzero");
  }
  if (c.regime_count < 1) throw ConfigError("regime_count must be >= 1");

  const int m = c.marks.count();
  const long branching = (1L << c.asset_count) * (m + 1);
  long nodes = 1, total = 1;
  for (int k = 0; k < c.grid.step_count; ++k) {
    if (nodes > c.node_budget / branching + 1)
      throw ConfigError("node budget exceeded: (2^d*(m+1))^N = " + std::to_string(branching) +
                        "^" + std::to_string(c.grid.step_count) + " nodes > budget " +
                        std::to_string(c.node_budget));
    nodes *= branching;
    total += nodes;
    if (total > c.node_budget)
      throw ConfigError("node budget exceeded: tree needs " + std::to_string(total) +
                        "+ nodes > budget " + std::to_string(c.node_budget));
  }
}

std::vector<double> coefficient_value(const CoefficientSpec& spec, int state, long total_jumps,
                                      std::size_t expected, const char* name) {
  switch (spec.kind) {
    case CoefficientSpec::Kind::Constant:
      if (spec.values.empty() || spec.values[0].size() != expected)
        throw ConfigError(std::string(name) + ": constant spec has wrong shape");
      return spec.values[0];
    case CoefficientSpec::Kind::Regime: {
      if (spec.values.empty()) throw ConfigError(std::string(name) + ": regime table empty");
      const auto& row = spec.values[static_cast<std::size_t>(state) % spec.values.size()];
      if (row.size() != expected) throw ConfigError(std::string(name) + ": regime row has wrong shape");
      return row;
    }
    case CoefficientSpec::Kind::SelfExciting: {
      if (spec.base.size() != expected || spec.slope.size() != expected || spec.cap.size() != expected)
        throw ConfigError(std::string(name) + ": self-exciting spec has wrong shape");
      std::vector<double> out(expected);
      for (std::size_t j = 0; j < expected; ++j)
        out[j] = std::min(spec.base[j] * (1.0 + spec.slope[j] * static_cast<double>(total_jumps)),
                          spec.cap[j]);
      return out;
    }
  }
  throw ConfigError(std::string(name) + ": unknown coefficient kind");
}

}  // namespace

LatticeModel build_lattice(const ModelConfig& config) {
  check_config(config);

  LatticeModel model;
  model.config_ = config;
  const int N = config.grid.step_count;
  const int d = config.asset_count;
  const int m = config.marks.count();
  const int jump_br = m + 1;
  const int diff_br = 1 << d;
  const int branching = diff_br * jump_br;
  const double dt = config.grid.dt();
  model.sqrt_dt_ = std::sqrt(dt);
  model.diffusion_weight_ = 1.0 / diff_br;

  model.slices_.resize(static_cast<std::size_t>(N) + 1);
  long count = 1;
  for (int k = 0; k <= N; ++k) {
    auto& s = model.slices_[static_cast<std::size_t>(k)];
    s.node_count = count;
    s.assets.resize(static_cast<std::size_t>(count) * d);
    s.jump_counts.assign(static_cast<std::size_t>(count) * std::max(m, 1), 0);
    s.regime.assign(static_cast<std::size_t>(count), 0);
    if (k < N) {
      s.phi.resize(static_cast<std::size_t>(count) * d);
      s.sigma.resize(static_cast<std::size_t>(count) * d * d);
      s.zeta.resize(static_cast<std::size_t>(count) * std::max(m, 1));
      s.kappa.resize(static_cast<std::size_t>(count) * jump_br);
    }
    model.total_nodes_ += count;
    if (k < N) count *= branching;
  }

  auto& root = model.slices_[0];
  for (int i = 0; i < d; ++i) root.assets[static_cast<std::size_t>(i)] = config.initial_price[static_cast<std::size_t>(i)];
  root.regime[0] = static_cast<std::int32_t>(config.initial_regime % config.regime_count);

  const double sdt = model.sqrt_dt_;
  for (int k = 0; k < N; ++k) {
    auto& cur = model.slices_[static_cast<std::size_t>(k)];
    auto& next = model.slices_[static_cast<std::size_t>(k) + 1];
    for (long node = 0; node < cur.node_count; ++node) {
      const std::size_t ni = static_cast<std::size_t>(node);
      long total_jumps = 0;
      for (int j = 0; j < m; ++j) total_jumps += cur.jump_counts[ni * m + j];
      const int state = cur.regime[ni];

      const auto phi = coefficient_value(config.phi, state, total_jumps, static_cast<std::size_t>(d), "phi");
      const auto sigma = coefficient_value(config.sigma, state, total_jumps, static_cast<std::size_t>(d) * d, "sigma");
      std::vector<double> zeta;
      if (m > 0) zeta = coefficient_value(config.zeta, state, total_jumps, static_cast<std::size_t>(m), "zeta");

      double phi_norm1 = 0.0, phi_norm2 = 0.0;
      for (int i = 0; i < d; ++i) {
        cur.phi[ni * d + i] = phi[static_cast<std::size_t>(i)];
        phi_norm1 += std::fabs(phi[static_cast<std::size_t>(i)]);
        phi_norm2 += phi[static_cast<std::size_t>(i)] * phi[static_cast<std::size_t>(i)];
      }
      model.max_phi_norm_ = std::max(model.max_phi_norm_, std::sqrt(phi_norm2));
      if (!(phi_norm1 * sdt < 1.0))
        throw ModelError("step-size violation at node " + model.path_string(k, node) +
                         ": |phi|_1*sqrt(dt) = " + std::to_string(phi_norm1 * sdt) + " >= 1");
      for (std::size_t q = 0; q < sigma.size(); ++q) cur.sigma[ni * d * d + q] = sigma[q];
      if (!linalg::invertible(sigma, static_cast<std::size_t>(d)))
        throw ModelError("singular volatility matrix at node " + model.path_string(k, node));

      double kappa_sum = 0.0;
      for (int j = 0; j < m; ++j) {
        const double z = zeta[static_cast<std::size_t>(j)];
        if (z < 0.0)
          throw ModelError("negative compensator density at node " + model.path_string(k, node));
        cur.zeta[ni * m + j] = z;
        const double kj = z * config.marks.marks[static_cast<std::size_t>(j)].weight * dt;
        cur.kappa[ni * jump_br + 1 + j] = kj;
        kappa_sum += kj;
      }
      if (!(kappa_sum < 1.0))
        throw ModelError("step-size violation at node " + model.path_string(k, node) +
                         ": no-jump branch nonpositive (sum zeta*lambda*dt = " +
                         std::to_string(kappa_sum) + " >= 1)");
      cur.kappa[ni * jump_br + 0] = 1.0 - kappa_sum;

      // Children: multiplicative asset update driven by the diffusion branch only.
      for (int w = 0; w < diff_br; ++w) {
        std::vector<double> growth(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
          double drive = 0.0;
          for (int j = 0; j < d; ++j) {
            const double dwj = (((w >> j) & 1) ? sdt : -sdt) + phi[static_cast<std::size_t>(j)] * dt;
            drive += sigma[static_cast<std::size_t>(i) * d + j] * dwj;
          }
          growth[static_cast<std::size_t>(i)] = 1.0 + drive;
          if (!(growth[static_cast<std::size_t>(i)] > 0.0))
            throw ModelError("step-size violation at node " + model.path_string(k, node) +
                             ": asset " + std::to_string(i) + " update factor " +
                             std::to_string(growth[static_cast<std::size_t>(i)]) + " <= 0");
        }
        for (int j = 0; j < jump_br; ++j) {
          const long child = node * branching + w * jump_br + j;
          const std::size_t ci = static_cast<std::size_t>(child);
          for (int i = 0; i < d; ++i)
            next.assets[ci * d + i] = cur.assets[ni * d + i] * growth[static_cast<std::size_t>(i)];
          for (int q = 0; q < m; ++q)
            next.jump_counts[ci * m + q] = cur.jump_counts[ni * m + q] + ((j == q + 1) ? 1 : 0);
          next.regime[ci] = static_cast<std::int32_t>(
              (cur.regime[ni] + ((j > 0) ? 1 : 0)) % config.regime_count);
        }
      }
    }
  }
  return model;
}

TerminalState LatticeModel::state_at(int k, long node) const {
  const Slice& s = slice(k);
  const int d = assets();
  const int m = mark_count();
  TerminalState st;
  st.assets.assign(s.assets.begin() + static_cast<long>(node) * d,
                   s.assets.begin() + static_cast<long>(node + 1) * d);
  st.jump_counts.resize(static_cast<std::size_t>(m));
  std::size_t l = 0;
  for (const auto& mk : config_.marks.marks) l = std::max(l, mk.vector.size());
  st.mark_sum.assign(std::max<std::size_t>(l, 1), 0.0);
  for (int j = 0; j < m; ++j) {
    const long cnt = s.jump_counts[static_cast<std::size_t>(node) * m + j];
    st.jump_counts[static_cast<std::size_t>(j)] = cnt;
    const auto& vec = config_.marks.marks[static_cast<std::size_t>(j)].vector;
    for (std::size_t c = 0; c < vec.size(); ++c) st.mark_sum[c] += static_cast<double>(cnt) * vec[c];
  }
  return st;
}

std::vector<double> LatticeModel::evaluate_claim(const ClaimExpr& claim) const {
  const int N = steps();
  const long leaves = nodes_at(N);
  std::vector<double> out(static_cast<std::size_t>(leaves));
  for (long i = 0; i < leaves; ++i) out[static_cast<std::size_t>(i)] = claim.eval(state_at(N, i));
  return out;
}

std::string LatticeModel::path_string(int k, long node) const {
  // Decode the branch digits root -> node.
  std::vector<int> digits(static_cast<std::size_t>(k));
  long n = node;
  for (int q = k; q-- > 0;) {
    digits[static_cast<std::size_t>(q)] = static_cast<int>(n % branching());
    n /= branching();
  }
  std::ostringstream os;
  os << "t" << k << ":#" << node;
  if (k > 0) {
    os << " [";
    for (int q = 0; q < k; ++q) {
      const int b = digits[static_cast<std::size_t>(q)];
      const int w = branch_diffusion(b), j = branch_jump(b);
      if (q) os << "/";
      for (int i = 0; i < assets(); ++i) os << (((w >> i) & 1) ? '+' : '-');
      if (j > 0) os << "j" << j;
    }
    os << "]";
  }
  return os.str();
}

std::vector<double> LatticeModel::theta_of_shares(int k, long node, std::span<const double> shares) const {
  const int d = assets();
  const auto S = asset_prices(k, node);
  const auto sg = sigma_at(k, node);
  // theta = sigma^T diag(S) shares
  std::vector<double> scaled(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) scaled[static_cast<std::size_t>(i)] = S[static_cast<std::size_t>(i)] * shares[static_cast<std::size_t>(i)];
  std::vector<double> theta(static_cast<std::size_t>(d));
  linalg::matvec_t(sg, scaled, theta);
  return theta;
}

std::vector<double> LatticeModel::shares_of_theta(int k, long node, std::span<const double> theta) const {
  const int d = assets();
  const auto S = asset_prices(k, node);
  const auto sg = sigma_at(k, node);
  // Solve sigma^T x = theta, then shares = diag(S)^{-1} x.
  std::vector<double> At(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) At[static_cast<std::size_t>(i) * d + j] = sg[static_cast<std::size_t>(j) * d + i];
  std::vector<double> x(static_cast<std::size_t>(d));
  if (!linalg::solve(At, std::vector<double>(theta.begin(), theta.end()), x))
    throw ModelError("singular Sigma^T at node " + path_string(k, node));
  for (int i = 0; i < d; ++i) x[static_cast<std::size_t>(i)] /= S[static_cast<std::size_t>(i)];
  return x;
}

ValidationReport LatticeModel::validate() const {
  ValidationReport r;
  const int N = steps();
  const int d = assets();
  const int m = mark_count();
  const int B = branching();
  r.min_asset_price = config_.initial_price.empty() ? 0.0 : config_.initial_price[0];

  for (int k = 0; k <= N; ++k) {
    const Slice& s = slice(k);
    for (long node = 0; node < s.node_count; ++node)
      for (int i = 0; i < d; ++i) {
        const double sp = s.assets[static_cast<std::size_t>(node) * d + i];
        r.min_asset_price = std::min(r.min_asset_price, sp);
        if (!(sp > 0.0)) {
          r.passed = false;
          r.violations.push_back("nonpositive asset price at node " + path_string(k, node));
        }
      }
  }

  for (int k = 0; k < N; ++k) {
    const Slice& s = slice(k);
    for (long node = 0; node < s.node_count; ++node) {
      const std::size_t ni = static_cast<std::size_t>(node);
      for (int j = 0; j < m; ++j) r.realized_c_nu = std::max(r.realized_c_nu, s.zeta[ni * m + j]);

      double psum = 0.0;
      std::vector<double> dw_mean(static_cast<std::size_t>(d), 0.0);
      std::vector<double> jump_mean(static_cast<std::size_t>(m) + 1, 0.0);
      for (int b = 0; b < B; ++b) {
        const double p = branch_probability(k, node, b);
        psum += p;
        r.min_branch_probability = std::min(r.min_branch_probability, p);
        if (!(p > 0.0)) {
          r.passed = false;
          r.violations.push_back(branch_jump(b) == 0 && p <= 0.0 && kappa_at(k, node)[0] <= 0.0
                                     ? "no-jump branch nonpositive at node " + path_string(k, node)
                                     : "nonpositive branch probability at node " + path_string(k, node));
        }
        const int w = branch_diffusion(b);
        for (int i = 0; i < d; ++i) dw_mean[static_cast<std::size_t>(i)] += p * brownian_increment(w, i);
        jump_mean[static_cast<std::size_t>(branch_jump(b))] += p;
      }
      r.max_probability_sum_error = std::max(r.max_probability_sum_error, std::fabs(psum - 1.0));
      for (int i = 0; i < d; ++i)
        r.max_brownian_mean_residual = std::max(r.max_brownian_mean_residual, std::fabs(dw_mean[static_cast<std::size_t>(i)]));
      const auto kap = kappa_at(k, node);
      for (int j = 0; j <= m; ++j)
        r.max_jump_mean_residual = std::max(
            r.max_jump_mean_residual, std::fabs(jump_mean[static_cast<std::size_t>(j)] - kap[static_cast<std::size_t>(j)]));
    }
  }
  if (r.max_probability_sum_error > 1e-14) {
    r.passed = false;
    r.violations.push_back("child probabilities do not sum to 1 within 1e-14");
  }
  return r;
}

}  // namespace bsdelab
