#include "bsdelab/oracles.hpp"

#include <atomic>
#include <cmath>
#include <mutex>

#include "bsdelab/linalg.hpp"
#include "bsdelab/parallel.hpp"

namespace bsdelab {
namespace {

struct NodeObjective {
  // exponents[b] = alpha*Y'(child_b); weights[b] = branch probability.
  std::vector<double> weights;
  std::vector<double> exponents;
  std::vector<std::vector<double>> drivers;  // per branch, d entries
  double alpha = 1.0;
  int dims = 1;

  /// (1/alpha) log sum_b w_b exp(exponents_b - alpha theta.d_b), stabilized.
  double value(std::span<const double> theta) const {
    double mx = -1e300;
    for (std::size_t b = 0; b < weights.size(); ++b)
      mx = std::max(mx, exponents[b] - alpha * linalg::dot(drivers[b], theta));
    double s = 0.0;
    for (std::size_t b = 0; b < weights.size(); ++b)
      s += weights[b] * std::exp(exponents[b] - alpha * linalg::dot(drivers[b], theta) - mx);
    return (mx + std::log(s)) / alpha;
  }

  /// Gradient of value (= -E_rho[d]) and the softmax-weighted driver moments.
  void gradient_curvature(std::span<const double> theta, std::span<double> grad,
                          std::vector<double>& hess) const {
    double mx = -1e300;
    for (std::size_t b = 0; b < weights.size(); ++b)
      mx = std::max(mx, exponents[b] - alpha * linalg::dot(drivers[b], theta));
    double z = 0.0;
    std::vector<double> mean(static_cast<std::size_t>(dims), 0.0);
    std::vector<double> second(static_cast<std::size_t>(dims) * dims, 0.0);
    for (std::size_t b = 0; b < weights.size(); ++b) {
      const double w = weights[b] * std::exp(exponents[b] - alpha * linalg::dot(drivers[b], theta) - mx);
      z += w;
      for (int i = 0; i < dims; ++i) {
        mean[static_cast<std::size_t>(i)] += w * drivers[b][static_cast<std::size_t>(i)];
        for (int j = 0; j < dims; ++j)
          second[static_cast<std::size_t>(i) * dims + j] +=
              w * drivers[b][static_cast<std::size_t>(i)] * drivers[b][static_cast<std::size_t>(j)];
      }
    }
    for (int i = 0; i < dims; ++i) {
      mean[static_cast<std::size_t>(i)] /= z;
      grad[static_cast<std::size_t>(i)] = -mean[static_cast<std::size_t>(i)];
    }
    hess.assign(static_cast<std::size_t>(dims) * dims, 0.0);
    for (int i = 0; i < dims; ++i)
      for (int j = 0; j < dims; ++j)
        hess[static_cast<std::size_t>(i) * dims + j] =
            alpha * (second[static_cast<std::size_t>(i) * dims + j] / z -
                     mean[static_cast<std::size_t>(i)] * mean[static_cast<std::size_t>(j)]);
  }
};

/// Safeguarded Newton on a smooth strictly convex objective; returns true when
/// the gradient tolerance was reached, false when the golden fallback ran.
bool minimize(const NodeObjective& obj, std::span<double> theta, const DpOptions& opts) {
  const int d = obj.dims;
  std::vector<double> grad(static_cast<std::size_t>(d)), hess, step(static_cast<std::size_t>(d));
  std::vector<double> gcand(static_cast<std::size_t>(d)), hcand;
  bool at_tolerance = false;
  obj.gradient_curvature(theta, grad, hess);
  for (int it = 0; it < opts.max_newton; ++it) {
    double gn = 0.0;
    for (double g : grad) gn = std::max(gn, std::fabs(g));
    if (gn <= opts.gradient_tol) {
      // One extra full step once the tolerance is reached squares the
      // remaining argument error (the tolerance is on the gradient, not the
      // optimizer itself).
      if (at_tolerance) return true;
      at_tolerance = true;
      if (!linalg::solve(hess, std::vector<double>(grad.begin(), grad.end()), step)) return true;
      for (int i = 0; i < d; ++i) theta[static_cast<std::size_t>(i)] -= step[static_cast<std::size_t>(i)];
      obj.gradient_curvature(theta, grad, hess);
      continue;
    }
    at_tolerance = false;
    if (!linalg::solve(hess, std::vector<double>(grad.begin(), grad.end()), step)) break;
    // Damped step accepted on gradient-norm decrease: the value itself is flat
    // to rounding near the bottom, the gradient is not.
    double scale = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 40; ++bt) {
      std::vector<double> cand(theta.begin(), theta.end());
      for (int i = 0; i < d; ++i) cand[static_cast<std::size_t>(i)] -= scale * step[static_cast<std::size_t>(i)];
      obj.gradient_curvature(cand, gcand, hcand);
      double gc = 0.0;
      for (double g : gcand) gc = std::max(gc, std::fabs(g));
      if (gc < gn || gc <= opts.gradient_tol) {
        std::copy(cand.begin(), cand.end(), theta.begin());
        grad = gcand;
        hess = hcand;
        moved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!moved) break;
  }
  // Final tolerance check; golden-section rescue for the scalar case.
  obj.gradient_curvature(theta, grad, hess);
  double gn = 0.0;
  for (double g : grad) gn = std::max(gn, std::fabs(g));
  if (gn <= opts.gradient_tol) return true;
  if (d != 1) throw NumericalError("node optimizer stalled in " + std::to_string(d) + " dimensions");
  double lo = theta[0] - 1.0, hi = theta[0] + 1.0;
  while (obj.value(std::vector<double>{lo}) < obj.value(std::vector<double>{theta[0]})) lo -= (hi - lo);
  while (obj.value(std::vector<double>{hi}) < obj.value(std::vector<double>{theta[0]})) hi += (hi - lo);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
  double f1 = obj.value(std::vector<double>{c1}), f2 = obj.value(std::vector<double>{c2});
  for (int it = 0; it < 200 && (b - a) > 1e-14 * (1.0 + std::fabs(a)); ++it) {
    if (f1 < f2) {
      b = c2; c2 = c1; f2 = f1;
      c1 = b - gr * (b - a);
      f1 = obj.value(std::vector<double>{c1});
    } else {
      a = c1; c1 = c2; f1 = f2;
      c2 = a + gr * (b - a);
      f2 = obj.value(std::vector<double>{c2});
    }
  }
  theta[0] = 0.5 * (a + b);
  return false;
}

NodeObjective node_objective(const LatticeModel& model, const LatticeMeasure& frame, int k,
                             long node, std::span<const double> next_y, double alpha) {
  const int B = model.branching();
  const int d = model.assets();
  NodeObjective obj;
  obj.alpha = alpha;
  obj.dims = d;
  obj.weights.resize(static_cast<std::size_t>(B));
  obj.exponents.resize(static_cast<std::size_t>(B));
  obj.drivers.assign(static_cast<std::size_t>(B), std::vector<double>(static_cast<std::size_t>(d)));
  for (int b = 0; b < B; ++b) {
    obj.weights[static_cast<std::size_t>(b)] = frame.probability(k, node, b);
    obj.exponents[static_cast<std::size_t>(b)] =
        alpha * next_y[static_cast<std::size_t>(LatticeModel::child_index(node, b, B))];
    const int w = model.branch_diffusion(b);
    for (int i = 0; i < d; ++i)
      obj.drivers[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)] =
          frame.driver_increment(k, node, w, i);
  }
  return obj;
}

}  // namespace

DpSolution entropic_recursion(const LatticeModel& model, const LatticeMeasure& frame,
                              std::span<const double> terminal, double alpha,
                              const DpOptions& opts) {
  const int N = model.steps();
  const int d = model.assets();
  DpSolution sol;
  sol.Y.resize(static_cast<std::size_t>(N) + 1);
  sol.theta.resize(static_cast<std::size_t>(N));
  sol.Y[static_cast<std::size_t>(N)].assign(terminal.begin(), terminal.end());
  std::atomic<int> fallbacks{0};
  std::mutex fail_mutex;
  std::string failure;

  for (int k = N - 1; k >= 0; --k) {
    const long n = model.nodes_at(k);
    sol.Y[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(n), 0.0);
    sol.theta[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(n) * d, 0.0);
    const auto& Ynext = sol.Y[static_cast<std::size_t>(k) + 1];
    parallel_for(n, opts.threads, [&](long lo, long hi) {
      for (long node = lo; node < hi; ++node) {
        try {
          const NodeObjective obj = node_objective(model, frame, k, node, Ynext, alpha);
          std::vector<double> theta(static_cast<std::size_t>(d));
          const auto phi = model.phi_at(k, node);
          for (int i = 0; i < d; ++i) theta[static_cast<std::size_t>(i)] = phi[static_cast<std::size_t>(i)] / alpha;
          if (!minimize(obj, theta, opts)) fallbacks.fetch_add(1);
          sol.Y[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)] = obj.value(theta);
          for (int i = 0; i < d; ++i)
            sol.theta[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * d + i] =
                theta[static_cast<std::size_t>(i)];
        } catch (const NumericalError& e) {
          std::scoped_lock lock(fail_mutex);
          if (failure.empty()) failure = std::string(e.what()) + " at node " + model.path_string(k, node);
        }
      }
    });
    if (!failure.empty()) throw NumericalError(failure);
  }
  sol.golden_fallbacks = fallbacks.load();
  return sol;
}

DpSolution brute_force_primal(const LatticeModel& model, const LatticeMeasure& frame,
                              std::span<const double> terminal, double alpha,
                              const DpOptions& opts) {
  const int N = model.steps();
  const int B = model.branching();
  const int d = model.assets();
  DpSolution sol;
  sol.Y.resize(static_cast<std::size_t>(N) + 1);
  sol.theta.resize(static_cast<std::size_t>(N));
  sol.Y[static_cast<std::size_t>(N)].assign(terminal.begin(), terminal.end());

  // Work in the negated value parametrization W = -V = exp(alpha*Y) > 0 and
  // minimize E[W' exp(-alpha theta.d)] by plain Newton.
  std::vector<double> Wnext(static_cast<std::size_t>(model.nodes_at(N)));
  for (long i = 0; i < model.nodes_at(N); ++i)
    Wnext[static_cast<std::size_t>(i)] = std::exp(alpha * terminal[static_cast<std::size_t>(i)]);

  std::atomic<int> fallbacks{0};
  for (int k = N - 1; k >= 0; --k) {
    const long n = model.nodes_at(k);
    sol.Y[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(n), 0.0);
    sol.theta[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(n) * d, 0.0);
    std::vector<double> W(static_cast<std::size_t>(n));
    for (long node = 0; node < n; ++node) {
      std::vector<double> theta(static_cast<std::size_t>(d));
      const auto phi = model.phi_at(k, node);
      for (int i = 0; i < d; ++i) theta[static_cast<std::size_t>(i)] = phi[static_cast<std::size_t>(i)] / alpha;

      auto objective = [&](std::span<const double> th, std::span<double> grad,
                           std::vector<double>* hess) {
        double val = 0.0;
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
        if (hess) hess->assign(static_cast<std::size_t>(d) * d, 0.0);
        for (int b = 0; b < B; ++b) {
          const double q = frame.probability(k, node, b);
          const long c = LatticeModel::child_index(node, b, B);
          const int w = model.branch_diffusion(b);
          double dot = 0.0;
          std::vector<double> drv(static_cast<std::size_t>(d));
          for (int i = 0; i < d; ++i) {
            drv[static_cast<std::size_t>(i)] = frame.driver_increment(k, node, w, i);
            dot += th[static_cast<std::size_t>(i)] * drv[static_cast<std::size_t>(i)];
          }
          const double term = q * Wnext[static_cast<std::size_t>(c)] * std::exp(-alpha * dot);
          val += term;
          for (int i = 0; i < d; ++i) {
            if (!grad.empty()) grad[static_cast<std::size_t>(i)] -= alpha * term * drv[static_cast<std::size_t>(i)];
            if (hess)
              for (int j = 0; j < d; ++j)
                (*hess)[static_cast<std::size_t>(i) * d + j] +=
                    alpha * alpha * term * drv[static_cast<std::size_t>(i)] * drv[static_cast<std::size_t>(j)];
          }
        }
        return val;
      };

      std::vector<double> grad(static_cast<std::size_t>(d)), hess, step(static_cast<std::size_t>(d));
      std::vector<double> gcand(static_cast<std::size_t>(d)), hcand;
      bool converged = false;
      bool at_tolerance = false;
      double f0 = objective(theta, grad, &hess);
      for (int it = 0; it < opts.max_newton; ++it) {
        double gn = 0.0;
        for (double g : grad) gn = std::max(gn, std::fabs(g));
        // Gradient scale carries the value W; stop on the relative condition,
        // with one polish step once it is first met.
        if (gn <= opts.gradient_tol * std::max(1.0, f0)) {
          if (at_tolerance) {
            converged = true;
            break;
          }
          at_tolerance = true;
          if (!linalg::solve(hess, std::vector<double>(grad.begin(), grad.end()), step)) {
            converged = true;
            break;
          }
          for (int i = 0; i < d; ++i) theta[static_cast<std::size_t>(i)] -= step[static_cast<std::size_t>(i)];
          f0 = objective(theta, grad, &hess);
          continue;
        }
        at_tolerance = false;
        if (!linalg::solve(hess, std::vector<double>(grad.begin(), grad.end()), step)) break;
        // Accept on gradient-norm decrease; the value is rounding-flat at the
        // bottom of the basin.
        double scale = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 40; ++bt) {
          std::vector<double> cand(theta.begin(), theta.end());
          for (int i = 0; i < d; ++i) cand[static_cast<std::size_t>(i)] -= scale * step[static_cast<std::size_t>(i)];
          const double fc = objective(cand, gcand, &hcand);
          double gc = 0.0;
          for (double g : gcand) gc = std::max(gc, std::fabs(g));
          if (gc < gn || gc <= opts.gradient_tol * std::max(1.0, fc)) {
            theta = cand;
            f0 = fc;
            grad = gcand;
            hess = hcand;
            moved = true;
            break;
          }
          scale *= 0.5;
        }
        if (!moved) break;
      }
      if (!converged) {
        if (d != 1)
          throw NumericalError("brute-force optimizer stalled at node " + model.path_string(k, node));
        fallbacks.fetch_add(1);
        double a = theta[0] - 2.0, b = theta[0] + 2.0;
        auto f = [&](double th) {
          std::vector<double> v{th};
          return objective(v, {}, nullptr);
        };
        while (f(a) < f(theta[0])) a -= (b - a);
        while (f(b) < f(theta[0])) b += (b - a);
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double c1 = b - gr * (b - a), c2 = a + gr * (b - a), f1 = f(c1), f2 = f(c2);
        for (int it = 0; it < 300 && (b - a) > 1e-15 * (1.0 + std::fabs(a)); ++it) {
          if (f1 < f2) { b = c2; c2 = c1; f2 = f1; c1 = b - gr * (b - a); f1 = f(c1); }
          else { a = c1; c1 = c2; f1 = f2; c2 = a + gr * (b - a); f2 = f(c2); }
        }
        theta[0] = 0.5 * (a + b);
      }
      const double w = objective(theta, grad, nullptr);
      W[static_cast<std::size_t>(node)] = w;
      sol.Y[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)] = std::log(w) / alpha;
      for (int i = 0; i < d; ++i)
        sol.theta[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * d + i] = theta[static_cast<std::size_t>(i)];
    }
    Wnext = std::move(W);
  }
  sol.golden_fallbacks = fallbacks.load();
  return sol;
}

double strategy_value(const LatticeModel& model, const LatticeMeasure& frame,
                      const std::vector<std::vector<double>>& theta,
                      std::span<const double> claim, double alpha) {
  const int N = model.steps();
  const int B = model.branching();
  const int d = model.assets();
  std::vector<double> gains{0.0};
  std::vector<double> prob{1.0};
  for (int k = 0; k < N; ++k) {
    const long n = model.nodes_at(k);
    std::vector<double> g2(static_cast<std::size_t>(n) * B), p2(static_cast<std::size_t>(n) * B);
    for (long node = 0; node < n; ++node)
      for (int b = 0; b < B; ++b) {
        const int w = model.branch_diffusion(b);
        double dot = 0.0;
        for (int i = 0; i < d; ++i)
          dot += theta[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * d + i] *
                 frame.driver_increment(k, node, w, i);
        const long c = LatticeModel::child_index(node, b, B);
        g2[static_cast<std::size_t>(c)] = gains[static_cast<std::size_t>(node)] + dot;
        p2[static_cast<std::size_t>(c)] = prob[static_cast<std::size_t>(node)] * frame.probability(k, node, b);
      }
    gains = std::move(g2);
    prob = std::move(p2);
  }
  double v = 0.0;
  for (long i = 0; i < model.nodes_at(N); ++i)
    v += prob[static_cast<std::size_t>(i)] *
         -std::exp(-alpha * (gains[static_cast<std::size_t>(i)] - claim[static_cast<std::size_t>(i)]));
  return v;
}

DualGridResult brute_force_dual(const LatticeModel& model, std::span<const double> claim,
                                double alpha, const DualGridSpec& spec) {
  if (model.steps() > 3 || model.mark_count() > 1)
    throw ConfigError("brute_force_dual budget: at most 3 steps and 1 mark");
  if (model.total_nodes() > spec.node_budget)
    throw ConfigError("brute_force_dual budget: node count exceeds " + std::to_string(spec.node_budget));
  const int m = model.mark_count();

  DualGridResult out;
  const int half = static_cast<int>(std::ceil(spec.max_exponent / std::log(spec.ratio)));
  for (int g = -half; g <= half; ++g) {
    const double tilt = std::pow(spec.ratio, g);
    MarkField U(static_cast<std::size_t>(model.steps()));
    bool feasible = true;
    for (int k = 0; k < model.steps() && feasible; ++k) {
      U[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(model.nodes_at(k)) * std::max(m, 1), 0.0);
      for (long node = 0; node < model.nodes_at(k); ++node)
        for (int j = 0; j < m; ++j) {
          double base = 0.0;
          if (spec.base_tilt)
            base = (*spec.base_tilt)[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * m + j];
          U[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * m + j] = base + std::log(tilt) / alpha;
        }
    }
    MeasureChange change;
    try {
      change = exponential_tilt_from_U(model, U, alpha, "dual-grid");
    } catch (const ModelError&) {
      continue;  // tilt pushes the jump mass past 1; infeasible grid point
    }
    const double obj = dual_objective(model, change, claim, alpha);
    out.objectives.push_back(obj);
    out.tilts.push_back(tilt);
    if (obj > out.best_objective) {
      out.best_objective = obj;
      out.best_tilt = tilt;
      out.best_change = change;
    }
  }
  if (out.objectives.empty()) throw NumericalError("dual grid entirely infeasible");
  return out;
}

}  // namespace bsdelab
