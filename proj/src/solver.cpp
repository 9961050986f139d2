#include "bsdelab/solver.hpp"

#include <atomic>
#include <cmath>
#include <mutex>

#include "bsdelab/linalg.hpp"
#include "bsdelab/parallel.hpp"

namespace bsdelab {
namespace {

struct NodeStats {
  double mean = 0.0;
  std::vector<double> z;
  std::vector<double> u;
};

/// Conditional statistics of the next-slice values at one node: mean, the
/// regression of the centered values on the centered driver (the unique
/// integrand reproducing the diffusion part exactly), and the jump-conditional
/// mean differences against the no-jump branch.
NodeStats extract(const LatticeModel& model, const LatticeMeasure& frame, int k, long node,
                  std::span<const double> next_y) {
  const int B = model.branching();
  const int d = model.assets();
  const int m = model.mark_count();
  const int jb = m + 1;
  NodeStats st;
  st.z.assign(static_cast<std::size_t>(d), 0.0);
  st.u.assign(static_cast<std::size_t>(m), 0.0);

  double mean = 0.0;
  std::vector<double> dbar(static_cast<std::size_t>(d), 0.0);
  for (int b = 0; b < B; ++b) {
    const double q = frame.probability(k, node, b);
    const long c = LatticeModel::child_index(node, b, B);
    mean += q * next_y[static_cast<std::size_t>(c)];
    const int w = model.branch_diffusion(b);
    for (int i = 0; i < d; ++i) dbar[static_cast<std::size_t>(i)] += q * frame.driver_increment(k, node, w, i);
  }
  st.mean = mean;

  // Centered regression on the driver.
  std::vector<double> gram(static_cast<std::size_t>(d) * d, 0.0), rhs(static_cast<std::size_t>(d), 0.0);
  for (int b = 0; b < B; ++b) {
    const double q = frame.probability(k, node, b);
    const long c = LatticeModel::child_index(node, b, B);
    const int w = model.branch_diffusion(b);
    const double dy = next_y[static_cast<std::size_t>(c)] - mean;
    for (int i = 0; i < d; ++i) {
      const double di = frame.driver_increment(k, node, w, i) - dbar[static_cast<std::size_t>(i)];
      rhs[static_cast<std::size_t>(i)] += q * dy * di;
      for (int j = 0; j < d; ++j) {
        const double dj = frame.driver_increment(k, node, w, j) - dbar[static_cast<std::size_t>(j)];
        gram[static_cast<std::size_t>(i) * d + j] += q * di * dj;
      }
    }
  }
  if (!linalg::solve(gram, rhs, st.z))
    throw NumericalError("degenerate driver covariance at node " + model.path_string(k, node));

  if (m > 0) {
    std::vector<double> jump_mean(static_cast<std::size_t>(jb), 0.0), jump_mass(static_cast<std::size_t>(jb), 0.0);
    for (int b = 0; b < B; ++b) {
      const double q = frame.probability(k, node, b);
      const long c = LatticeModel::child_index(node, b, B);
      const int j = model.branch_jump(b);
      jump_mean[static_cast<std::size_t>(j)] += q * next_y[static_cast<std::size_t>(c)];
      jump_mass[static_cast<std::size_t>(j)] += q;
    }
    const double nojump = jump_mean[0] / jump_mass[0];
    for (int j = 0; j < m; ++j)
      st.u[static_cast<std::size_t>(j)] =
          jump_mean[static_cast<std::size_t>(j) + 1] / jump_mass[static_cast<std::size_t>(j) + 1] - nojump;
  }
  return st;
}

}  // namespace

BsdeSolution solve_bsde(const LatticeModel& model, const LatticeMeasure& frame,
                        const GeneratorSpec& generator, std::span<const double> terminal,
                        const SolveOptions& opts) {
  const int N = model.steps();
  const int d = model.assets();
  const int m = model.mark_count();
  const double dt = model.dt();

  if (static_cast<long>(terminal.size()) != model.nodes_at(N))
    throw ConfigError("terminal data has wrong length");
  if (generator.kind() == GeneratorSpec::Kind::LipschitzAffine &&
      generator.lipschitz_constant() * dt >= 1.0)
    throw NumericalError("contraction violated: K_f*dt = " +
                         std::to_string(generator.lipschitz_constant() * dt) + " >= 1");
  if (opts.truncated) {
    const double bT = truncation_boundary(model.time(N), opts.profile, model.config().grid.horizon);
    for (long i = 0; i < model.nodes_at(N); ++i)
      if (std::fabs(terminal[static_cast<std::size_t>(i)]) > bT + opts.bound_tolerance)
        throw NumericalError("terminal datum exceeds the truncation bound at leaf " +
                             model.path_string(N, i));
  }

  const GeneratorSpec gen = opts.truncated
                                ? generator.truncated(opts.profile, model.config().grid.horizon)
                                : generator;

  BsdeSolution sol;
  sol.Y.resize(static_cast<std::size_t>(N) + 1);
  sol.Z.resize(static_cast<std::size_t>(N));
  sol.U.resize(static_cast<std::size_t>(N));
  sol.Y[static_cast<std::size_t>(N)].assign(terminal.begin(), terminal.end());

  std::mutex fail_mutex;
  std::string failure;
  std::atomic<int> max_iters{0};
  std::vector<double> residual_by_thread;

  for (int k = N - 1; k >= 0; --k) {
    const long n = model.nodes_at(k);
    auto& Yk = sol.Y[static_cast<std::size_t>(k)];
    auto& Zk = sol.Z[static_cast<std::size_t>(k)];
    auto& Uk = sol.U[static_cast<std::size_t>(k)];
    Yk.assign(static_cast<std::size_t>(n), 0.0);
    Zk.assign(static_cast<std::size_t>(n) * d, 0.0);
    Uk.assign(static_cast<std::size_t>(n) * std::max(m, 1), 0.0);
    const auto& Ynext = sol.Y[static_cast<std::size_t>(k) + 1];
    const double t = model.time(k);
    const double bound =
        opts.truncated ? truncation_boundary(t, opts.profile, model.config().grid.horizon) : 0.0;

    std::atomic<double> worst_residual{0.0};
    parallel_for(n, opts.threads, [&](long lo, long hi) {
      double local_resid = 0.0;
      int local_iters = 0;
      for (long node = lo; node < hi; ++node) {
        try {
          const NodeStats st = extract(model, frame, k, node, Ynext);
          for (int i = 0; i < d; ++i) Zk[static_cast<std::size_t>(node) * d + i] = st.z[static_cast<std::size_t>(i)];
          for (int j = 0; j < m; ++j) Uk[static_cast<std::size_t>(node) * m + j] = st.u[static_cast<std::size_t>(j)];

          GeneratorContext ctx;
          ctx.t = t;
          ctx.time_index = k;
          ctx.node = node;
          ctx.phi = model.phi_at(k, node);
          ctx.mark_mass = frame.mark_mass(k, node);
          ctx.dt = dt;

          double y = st.mean;
          if (opts.implicit_step) {
            double prev = opts.init == SolveOptions::PicardInit::Zero ? 0.0 : st.mean;
            y = prev;
            bool converged = false;
            int it = 0;
            for (; it < opts.max_iterations; ++it) {
              const double next = st.mean + gen.value(ctx, y, st.z, st.u) * dt;
              prev = y;
              y = next;
              if (std::fabs(y - prev) <= opts.tol) {
                converged = true;
                break;
              }
            }
            local_iters = std::max(local_iters, it + 1);
            if (!converged)
              throw NumericalError("Picard iteration did not converge at node " +
                                   model.path_string(k, node) + "; last iterates " +
                                   std::to_string(prev) + ", " + std::to_string(y));
          } else {
            y = st.mean + gen.value(ctx, st.mean, st.z, st.u) * dt;
          }

          if (opts.truncated && std::fabs(y) > bound + opts.bound_tolerance)
            throw NumericalError("truncated-route bound violated at node " + model.path_string(k, node) +
                                 ": |Y| = " + std::to_string(std::fabs(y)) + " > b(t) = " +
                                 std::to_string(bound));

          Yk[static_cast<std::size_t>(node)] = y;
          local_resid = std::max(local_resid,
                                 std::fabs(y - st.mean - gen.value(ctx, y, st.z, st.u) * dt));
        } catch (const NumericalError& e) {
          std::scoped_lock lock(fail_mutex);
          if (failure.empty())
            failure = std::string(e.what()) + " (node " + model.path_string(k, node) + ")";
        }
      }
      int seen = max_iters.load();
      while (local_iters > seen && !max_iters.compare_exchange_weak(seen, local_iters)) {}
      double seen_r = worst_residual.load();
      while (local_resid > seen_r && !worst_residual.compare_exchange_weak(seen_r, local_resid)) {}
    });
    if (!failure.empty()) throw NumericalError(failure);
    sol.max_step_residual = std::max(sol.max_step_residual, worst_residual.load());
  }
  sol.max_picard_iterations = max_iters.load();
  return sol;
}

RepresentationReport representation_check(const LatticeModel& model, const LatticeMeasure& frame,
                                          std::span<const double> terminal) {
  SolveOptions opts;
  BsdeSolution sol = solve_bsde(model, frame, GeneratorSpec::zero(), terminal, opts);
  RepresentationReport rep;
  const int N = model.steps();
  const int B = model.branching();
  const int d = model.assets();
  const int m = model.mark_count();
  for (int k = 0; k < N; ++k) {
    const long n = model.nodes_at(k);
    for (long node = 0; node < n; ++node) {
      // Conditional mean and mark masses under the frame.
      double mean = 0.0;
      for (int b = 0; b < B; ++b)
        mean += frame.probability(k, node, b) *
                sol.Y[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(
                    LatticeModel::child_index(node, b, B))];
      rep.max_mean_residual =
          std::max(rep.max_mean_residual,
                   std::fabs(sol.Y[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)] - mean));

      const auto kap = frame.mark_mass(k, node);
      double total_mass = 0.0;
      for (int j = 0; j < m; ++j) total_mass += kap[static_cast<std::size_t>(j) + 1];
      // Driver mean (zero under drift-matched frames; centered anyway).
      std::vector<double> dbar(static_cast<std::size_t>(d), 0.0);
      for (int b = 0; b < B; ++b) {
        const double q = frame.probability(k, node, b);
        const int w = model.branch_diffusion(b);
        for (int i = 0; i < d; ++i) dbar[static_cast<std::size_t>(i)] += q * frame.driver_increment(k, node, w, i);
      }
      for (int b = 0; b < B; ++b) {
        const long c = LatticeModel::child_index(node, b, B);
        const int w = model.branch_diffusion(b);
        const int j = model.branch_jump(b);
        double rebuilt = mean;
        for (int i = 0; i < d; ++i)
          rebuilt += sol.Z[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * d + i] *
                     (frame.driver_increment(k, node, w, i) - dbar[static_cast<std::size_t>(i)]);
        double jump_comp = 0.0;
        for (int q = 0; q < m; ++q)
          jump_comp -= sol.U[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * m + q] *
                       kap[static_cast<std::size_t>(q) + 1];
        if (j > 0) jump_comp += sol.U[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * m + (j - 1)];
        rebuilt += jump_comp;
        const double resid = std::fabs(sol.Y[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(c)] - rebuilt);
        rep.max_residual = std::max(rep.max_residual, resid);
      }
    }
  }
  return rep;
}

BoundReport bound_report(const LatticeModel& model, const BsdeSolution& sol,
                         const TruncationProfile& profile) {
  BoundReport r;
  const double T = model.config().grid.horizon;
  const int m = model.mark_count();
  for (int k = 0; k < static_cast<int>(sol.Y.size()); ++k) {
    const double b = truncation_boundary(model.time(k), profile, T);
    for (double y : sol.Y[static_cast<std::size_t>(k)])
      r.max_y_excess = std::max(r.max_y_excess, std::fabs(y) - b);
    if (k < static_cast<int>(sol.U.size()) && m > 0)
      for (double u : sol.U[static_cast<std::size_t>(k)])
        r.max_u_excess = std::max(r.max_u_excess, std::fabs(u) - 2.0 * b);
  }
  return r;
}

}  // namespace bsdelab
