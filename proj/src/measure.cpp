#include "bsdelab/measure.hpp"

#include <cmath>

namespace bsdelab {
namespace {

/// Neumaier-compensated accumulator: slice expectations over a million leaves
/// must hold 1e-13 invariants.
struct Accumulator {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double t = sum + v;
    carry += std::fabs(sum) >= std::fabs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double total() const { return sum + carry; }
};

/// Allocates the per-slice layout shared by every change.
MeasureChange blank_change(const LatticeModel& model, std::string label) {
  MeasureChange c;
  c.label = std::move(label);
  const int N = model.steps();
  c.factors.resize(static_cast<std::size_t>(N));
  c.diffusion_factors.resize(static_cast<std::size_t>(N));
  c.jump_factors.resize(static_cast<std::size_t>(N));
  c.kappa.resize(static_cast<std::size_t>(N));
  c.density.resize(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k < N; ++k) {
    const long n = model.nodes_at(k);
    c.factors[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(n) * model.branching(), 1.0);
    c.diffusion_factors[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(n) * model.diffusion_branches(), 1.0);
    c.jump_factors[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(n) * model.jump_branches(), 1.0);
    c.kappa[static_cast<std::size_t>(k)].assign(model.slice(k).kappa.begin(), model.slice(k).kappa.end());
  }
  return c;
}

/// Rebuilds combined factors, mark masses and the cumulative density from the
/// product parts. Throws when any factor fails strict positivity.
void finalize_product_change(const LatticeModel& model, MeasureChange& c) {
  const int N = model.steps();
  const int B = model.branching();
  const int jb = model.jump_branches();
  for (int k = 0; k < N; ++k) {
    const long n = model.nodes_at(k);
    auto& fac = c.factors[static_cast<std::size_t>(k)];
    auto& kap = c.kappa[static_cast<std::size_t>(k)];
    const auto& df = c.diffusion_factors[static_cast<std::size_t>(k)];
    const auto& jf = c.jump_factors[static_cast<std::size_t>(k)];
    for (long node = 0; node < n; ++node) {
      const auto base_kappa = model.kappa_at(k, node);
      for (int j = 0; j < jb; ++j) {
        const double f = jf[static_cast<std::size_t>(node) * jb + j];
        if (!(f > 0.0))
          throw ModelError(c.label + ": nonpositive jump factor at node " + model.path_string(k, node) +
                           " (j=" + std::to_string(j) + ", factor=" + std::to_string(f) + ")");
        kap[static_cast<std::size_t>(node) * jb + j] = base_kappa[static_cast<std::size_t>(j)] * f;
      }
      for (int w = 0; w < model.diffusion_branches(); ++w) {
        const double dfw = df[static_cast<std::size_t>(node) * model.diffusion_branches() + w];
        if (!(dfw > 0.0))
          throw ModelError(c.label + ": nonpositive diffusion factor at node " + model.path_string(k, node) +
                           " (step-size bound on phi violated)");
        for (int j = 0; j < jb; ++j)
          fac[static_cast<std::size_t>(node) * B + w * jb + j] = dfw * jf[static_cast<std::size_t>(node) * jb + j];
      }
    }
  }
  // Forward density accumulation.
  c.density[0].assign(1, 1.0);
  for (int k = 0; k < N; ++k) {
    const long n = model.nodes_at(k);
    auto& nxt = c.density[static_cast<std::size_t>(k) + 1];
    nxt.resize(static_cast<std::size_t>(n) * B);
    const auto& cur = c.density[static_cast<std::size_t>(k)];
    const auto& fac = c.factors[static_cast<std::size_t>(k)];
    for (long node = 0; node < n; ++node)
      for (int b = 0; b < B; ++b)
        nxt[static_cast<std::size_t>(node) * B + b] =
            cur[static_cast<std::size_t>(node)] * fac[static_cast<std::size_t>(node) * B + b];
  }
}

}  // namespace

LatticeMeasure::LatticeMeasure(const LatticeModel& model, DriverKind driver)
    : model_(&model), driver_(driver), label_("physical"), branching_(model.branching()) {
  const int N = model.steps();
  probs_.resize(static_cast<std::size_t>(N));
  kappa_.resize(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    const long n = model.nodes_at(k);
    probs_[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(n) * branching_);
    for (long node = 0; node < n; ++node)
      for (int b = 0; b < branching_; ++b)
        probs_[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * branching_ + b] =
            model.branch_probability(k, node, b);
    kappa_[static_cast<std::size_t>(k)].assign(model.slice(k).kappa.begin(), model.slice(k).kappa.end());
  }
}

LatticeMeasure::LatticeMeasure(const LatticeModel& model, const MeasureChange& change, DriverKind driver)
    : LatticeMeasure(model, driver) {
  label_ = change.label;
  const int N = model.steps();
  for (int k = 0; k < N; ++k) {
    const long n = model.nodes_at(k);
    for (long node = 0; node < n; ++node)
      for (int b = 0; b < branching_; ++b)
        probs_[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * branching_ + b] *=
            change.factor(k, node, b, branching_);
    kappa_[static_cast<std::size_t>(k)] = change.kappa[static_cast<std::size_t>(k)];
  }
}

MeasureChange identity_change(const LatticeModel& model) {
  MeasureChange c = blank_change(model, "identity");
  finalize_product_change(model, c);
  return c;
}

MeasureChange minimal_martingale_measure(const LatticeModel& model) {
  MeasureChange c = blank_change(model, "minimal-martingale");
  const int d = model.assets();
  for (int k = 0; k < model.steps(); ++k) {
    const long n = model.nodes_at(k);
    auto& df = c.diffusion_factors[static_cast<std::size_t>(k)];
    for (long node = 0; node < n; ++node) {
      const auto phi = model.phi_at(k, node);
      for (int w = 0; w < model.diffusion_branches(); ++w) {
        double dot = 0.0;
        for (int i = 0; i < d; ++i) dot += phi[static_cast<std::size_t>(i)] * model.brownian_increment(w, i);
        df[static_cast<std::size_t>(node) * model.diffusion_branches() + w] = 1.0 - dot;
      }
    }
  }
  finalize_product_change(model, c);
  return c;
}

MeasureChange exponential_tilt_from_U(const LatticeModel& model, const MarkField& U, double alpha,
                                      std::string label) {
  MeasureChange c = minimal_martingale_measure(model);
  c.label = std::move(label);
  const int m = model.mark_count();
  const int jb = model.jump_branches();
  for (int k = 0; k < model.steps(); ++k) {
    const long n = model.nodes_at(k);
    auto& jf = c.jump_factors[static_cast<std::size_t>(k)];
    for (long node = 0; node < n; ++node) {
      const auto kap = model.kappa_at(k, node);
      double tilted_sum = 0.0, base_sum = 0.0;
      for (int j = 0; j < m; ++j) {
        const double u = U[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * m + j];
        const double f = std::exp(alpha * u);
        jf[static_cast<std::size_t>(node) * jb + 1 + j] = f;
        tilted_sum += kap[static_cast<std::size_t>(j) + 1] * f;
        base_sum += kap[static_cast<std::size_t>(j) + 1];
      }
      // No-jump factor keeps the conditional expectation at 1 exactly.
      const double f0 = (1.0 - tilted_sum) / (1.0 - base_sum);
      if (!(f0 > 0.0))
        throw ModelError(c.label + ": no-jump factor nonpositive at node " + model.path_string(k, node) +
                         " (tilted jump mass " + std::to_string(tilted_sum) + " >= 1)");
      jf[static_cast<std::size_t>(node) * jb + 0] = f0;
    }
  }
  finalize_product_change(model, c);
  return c;
}

MeasureChange retilt_jumps(const LatticeModel& model, const MeasureChange& base,
                           const std::function<double(int, long, int)>& extra, std::string label) {
  MeasureChange c = base;
  c.label = std::move(label);
  const int m = model.mark_count();
  const int jb = model.jump_branches();
  for (int k = 0; k < model.steps(); ++k) {
    const long n = model.nodes_at(k);
    auto& jf = c.jump_factors[static_cast<std::size_t>(k)];
    for (long node = 0; node < n; ++node) {
      const auto kap = model.kappa_at(k, node);
      double tilted_sum = 0.0, base_mass = 0.0;
      for (int j = 0; j < m; ++j) {
        jf[static_cast<std::size_t>(node) * jb + 1 + j] *= extra(k, node, j);
        tilted_sum += kap[static_cast<std::size_t>(j) + 1] * jf[static_cast<std::size_t>(node) * jb + 1 + j];
        base_mass += kap[static_cast<std::size_t>(j) + 1];
      }
      const double f0 = (1.0 - tilted_sum) / (1.0 - base_mass);
      if (!(f0 > 0.0))
        throw ModelError(c.label + ": no-jump factor nonpositive at node " + model.path_string(k, node));
      jf[static_cast<std::size_t>(node) * jb + 0] = f0;
    }
  }
  finalize_product_change(model, c);
  return c;
}

MeasureChange change_from_branch_factors(const LatticeModel& model,
                                         std::vector<std::vector<double>> factors, std::string label) {
  MeasureChange c = blank_change(model, std::move(label));
  c.product_form = false;
  c.factors = std::move(factors);
  const int B = model.branching();
  const int jb = model.jump_branches();
  for (int k = 0; k < model.steps(); ++k) {
    const long n = model.nodes_at(k);
    auto& kap = c.kappa[static_cast<std::size_t>(k)];
    for (long node = 0; node < n; ++node) {
      for (int j = 0; j < jb; ++j) kap[static_cast<std::size_t>(node) * jb + j] = 0.0;
      for (int b = 0; b < B; ++b) {
        const double f = c.factors[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * B + b];
        if (!(f > 0.0))
          throw ModelError(c.label + ": nonpositive branch factor at node " + model.path_string(k, node));
        kap[static_cast<std::size_t>(node) * jb + model.branch_jump(b)] +=
            model.branch_probability(k, node, b) * f;
      }
    }
  }
  // Density accumulation (combined factors supplied directly).
  c.density.assign(static_cast<std::size_t>(model.steps()) + 1, {});
  c.density[0].assign(1, 1.0);
  for (int k = 0; k < model.steps(); ++k) {
    const long n = model.nodes_at(k);
    auto& nxt = c.density[static_cast<std::size_t>(k) + 1];
    nxt.resize(static_cast<std::size_t>(n) * B);
    for (long node = 0; node < n; ++node)
      for (int b = 0; b < B; ++b)
        nxt[static_cast<std::size_t>(node) * B + b] =
            c.density[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)] *
            c.factors[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * B + b];
  }
  return c;
}

std::vector<std::vector<double>> path_probabilities(const LatticeModel& model) {
  const int N = model.steps();
  const int B = model.branching();
  std::vector<std::vector<double>> p(static_cast<std::size_t>(N) + 1);
  p[0].assign(1, 1.0);
  for (int k = 0; k < N; ++k) {
    const long n = model.nodes_at(k);
    p[static_cast<std::size_t>(k) + 1].resize(static_cast<std::size_t>(n) * B);
    for (long node = 0; node < n; ++node)
      for (int b = 0; b < B; ++b)
        p[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(node) * B + b] =
            p[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)] * model.branch_probability(k, node, b);
  }
  return p;
}

double density_normalization_error(const LatticeModel& model, const MeasureChange& change) {
  const auto pp = path_probabilities(model);
  double worst = 0.0;
  for (int k = 0; k <= model.steps(); ++k) {
    Accumulator mean;
    for (long node = 0; node < model.nodes_at(k); ++node)
      mean.add(pp[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)] *
               change.density[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)]);
    worst = std::max(worst, std::fabs(mean.total() - 1.0));
  }
  return worst;
}

double martingale_residual(const LatticeModel& model, const MeasureChange& change) {
  const int B = model.branching();
  const int d = model.assets();
  double worst = 0.0;
  for (int k = 0; k < model.steps(); ++k) {
    for (long node = 0; node < model.nodes_at(k); ++node) {
      const auto S = model.asset_prices(k, node);
      for (int i = 0; i < d; ++i) {
        double mean = 0.0;
        for (int b = 0; b < B; ++b) {
          const double q = model.branch_probability(k, node, b) * change.factor(k, node, b, B);
          mean += q * model.slice(k + 1).assets[static_cast<std::size_t>(
                          LatticeModel::child_index(node, b, B)) * d + i];
        }
        worst = std::max(worst, std::fabs(mean - S[static_cast<std::size_t>(i)]));
      }
    }
  }
  return worst;
}

double compensator_transform_residual(const LatticeModel& model, const MeasureChange& change) {
  const int B = model.branching();
  const int jb = model.jump_branches();
  double worst = 0.0;
  for (int k = 0; k < model.steps(); ++k) {
    for (long node = 0; node < model.nodes_at(k); ++node) {
      std::vector<double> mass(static_cast<std::size_t>(jb), 0.0);
      for (int b = 0; b < B; ++b) {
        const double q = model.branch_probability(k, node, b) * change.factor(k, node, b, B);
        mass[static_cast<std::size_t>(model.branch_jump(b))] += q;
      }
      const auto& kap = change.kappa[static_cast<std::size_t>(k)];
      for (int j = 0; j < jb; ++j)
        worst = std::max(worst, std::fabs(mass[static_cast<std::size_t>(j)] -
                                          kap[static_cast<std::size_t>(node) * jb + j]));
    }
  }
  return worst;
}

double factorization_residual(const LatticeModel& model, const MeasureChange& change) {
  if (!change.product_form) return 0.0;
  const int B = model.branching();
  const int jb = model.jump_branches();
  const int db = model.diffusion_branches();
  double worst = 0.0;
  for (int k = 0; k < model.steps(); ++k) {
    for (long node = 0; node < model.nodes_at(k); ++node)
      for (int b = 0; b < B; ++b) {
        const int w = model.branch_diffusion(b), j = model.branch_jump(b);
        const double prod =
            change.diffusion_factors[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * db + w] *
            change.jump_factors[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * jb + j];
        worst = std::max(worst, std::fabs(prod - change.factor(k, node, b, B)));
      }
  }
  return worst;
}

double relative_entropy(const LatticeModel& model, const MeasureChange& change) {
  const auto pp = path_probabilities(model);
  const int N = model.steps();
  double h = 0.0;
  for (long node = 0; node < model.nodes_at(N); ++node) {
    const double p = pp[static_cast<std::size_t>(N)][static_cast<std::size_t>(node)];
    const double z = change.density[static_cast<std::size_t>(N)][static_cast<std::size_t>(node)];
    if (z > 0.0) h += p * z * std::log(z);
  }
  return h;
}

ChangeStatistics change_statistics(const LatticeModel& model, const MeasureChange& change,
                                   std::span<const double> leaf_values) {
  const int N = model.steps();
  const int B = model.branching();
  ChangeStatistics st;
  std::vector<double> p{1.0};
  for (int k = 0; k <= N; ++k) {
    if (k > 0) {
      const long prev = model.nodes_at(k - 1);
      std::vector<double> nxt(static_cast<std::size_t>(prev) * B);
      for (long node = 0; node < prev; ++node)
        for (int b = 0; b < B; ++b)
          nxt[static_cast<std::size_t>(node) * B + b] =
              p[static_cast<std::size_t>(node)] * model.branch_probability(k - 1, node, b);
      p = std::move(nxt);
    }
    Accumulator mean;
    for (long node = 0; node < model.nodes_at(k); ++node)
      mean.add(p[static_cast<std::size_t>(node)] *
               change.density[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)]);
    st.normalization_error = std::max(st.normalization_error, std::fabs(mean.total() - 1.0));
  }
  Accumulator entropy, expectation;
  for (long node = 0; node < model.nodes_at(N); ++node) {
    const double z = change.density[static_cast<std::size_t>(N)][static_cast<std::size_t>(node)];
    const double pw = p[static_cast<std::size_t>(node)];
    if (z > 0.0) entropy.add(pw * z * std::log(z));
    if (!leaf_values.empty()) expectation.add(pw * z * leaf_values[static_cast<std::size_t>(node)]);
  }
  st.entropy = entropy.total();
  st.expectation = expectation.total();
  return st;
}

double expectation(const LatticeModel& model, const MeasureChange& change,
                   std::span<const double> leaf_values) {
  const auto pp = path_probabilities(model);
  const int N = model.steps();
  double e = 0.0;
  for (long node = 0; node < model.nodes_at(N); ++node)
    e += pp[static_cast<std::size_t>(N)][static_cast<std::size_t>(node)] *
         change.density[static_cast<std::size_t>(N)][static_cast<std::size_t>(node)] *
         leaf_values[static_cast<std::size_t>(node)];
  return e;
}

double dual_objective(const LatticeModel& model, const MeasureChange& change,
                      std::span<const double> claim_leaves, double alpha) {
  return alpha * expectation(model, change, claim_leaves) - relative_entropy(model, change);
}

double exponential_density_gap(const LatticeModel& model, const MeasureChange& change,
                               const std::vector<std::vector<double>>& Y,
                               const std::vector<std::vector<double>>& theta, double alpha) {
  const int B = model.branching();
  const int d = model.assets();
  double worst = 0.0;
  // Compare cumulative densities: the stored product of change factors against
  // exp(-alpha(Y_0 + sum theta.dW^ - Y_t)) accumulated independently.
  std::vector<double> ordinary{1.0};
  for (int k = 0; k < model.steps(); ++k) {
    const long n = model.nodes_at(k);
    std::vector<double> nxt(static_cast<std::size_t>(n) * B);
    for (long node = 0; node < n; ++node) {
      for (int b = 0; b < B; ++b) {
        const int w = model.branch_diffusion(b);
        double gains = 0.0;
        for (int i = 0; i < d; ++i)
          gains += theta[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * d + i] *
                   model.tilted_increment(k, node, w, i);
        const long child = LatticeModel::child_index(node, b, B);
        const double dy = Y[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(child)] -
                          Y[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)];
        nxt[static_cast<std::size_t>(child)] =
            ordinary[static_cast<std::size_t>(node)] * std::exp(-alpha * (gains - dy));
        worst = std::max(worst, std::fabs(nxt[static_cast<std::size_t>(child)] -
                                          change.density[static_cast<std::size_t>(k) + 1]
                                                        [static_cast<std::size_t>(child)]));
      }
    }
    ordinary = std::move(nxt);
  }
  return worst;
}

}  // namespace bsdelab
