#include "bsdelab/stability.hpp"

#include <cmath>

namespace bsdelab {
namespace {

/// E_node[max over the path from (k, node) to T of |dY|^2], exact by walking
/// every path of the subtree with the running maximum (desk-scale inputs keep
/// this small).
double expected_path_sup(const LatticeModel& model, const LatticeMeasure& frame,
                         const std::vector<std::vector<double>>& dy2, int k, long node,
                         double running_max) {
  const int N = model.steps();
  const int B = model.branching();
  const double here = std::max(running_max, dy2[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)]);
  if (k == N) return here;
  double acc = 0.0;
  for (int b = 0; b < B; ++b) {
    const long c = LatticeModel::child_index(node, b, B);
    acc += frame.probability(k, node, b) * expected_path_sup(model, frame, dy2, k + 1, c, here);
  }
  return acc;
}

}  // namespace

StabilityReport stability_gap(const LatticeModel& model, const LatticeMeasure& frame,
                              const BsdeSolution& a, const BsdeSolution& b,
                              std::span<const double> delta_terminal,
                              const std::function<double(int, long)>& df_at) {
  const int N = model.steps();
  const int B = model.branching();
  const int d = model.assets();
  const int m = model.mark_count();
  const double dt = model.dt();
  if (a.Y.size() != b.Y.size()) throw ConfigError("stability_gap: solutions from different lattices");
  for (int k = 0; k <= N; ++k)
    if (a.Y[static_cast<std::size_t>(k)].size() != b.Y[static_cast<std::size_t>(k)].size())
      throw ConfigError("stability_gap: solutions from different lattices");

  std::vector<std::vector<double>> dy2(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k) {
    const long n = model.nodes_at(k);
    dy2[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
      const double dy = a.Y[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] -
                        b.Y[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
      dy2[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = dy * dy;
    }
  }

  StabilityReport rep;
  rep.lhs.resize(static_cast<std::size_t>(N) + 1);
  rep.rhs.resize(static_cast<std::size_t>(N) + 1);
  rep.ratio.resize(static_cast<std::size_t>(N) + 1);

  // Backward accumulators for the quadratic sums.
  std::vector<double> zsum(1, 0.0), fsum(1, 0.0), bsq;
  std::vector<double> zsum_next, fsum_next, bsq_next;
  bsq.resize(static_cast<std::size_t>(model.nodes_at(N)));
  for (long i = 0; i < model.nodes_at(N); ++i) {
    const double db = delta_terminal.empty() ? 0.0 : delta_terminal[static_cast<std::size_t>(i)];
    bsq[static_cast<std::size_t>(i)] = db * db;
  }
  zsum.assign(static_cast<std::size_t>(model.nodes_at(N)), 0.0);
  fsum.assign(static_cast<std::size_t>(model.nodes_at(N)), 0.0);

  rep.lhs[static_cast<std::size_t>(N)] = dy2[static_cast<std::size_t>(N)];
  rep.rhs[static_cast<std::size_t>(N)] = bsq;
  rep.ratio[static_cast<std::size_t>(N)].resize(bsq.size());
  for (std::size_t i = 0; i < bsq.size(); ++i)
    rep.ratio[static_cast<std::size_t>(N)][i] =
        bsq[i] > 0.0 ? rep.lhs[static_cast<std::size_t>(N)][i] / bsq[i] : 0.0;

  for (int k = N - 1; k >= 0; --k) {
    const long n = model.nodes_at(k);
    zsum_next = std::move(zsum);
    fsum_next = std::move(fsum);
    bsq_next = std::move(bsq);
    zsum.assign(static_cast<std::size_t>(n), 0.0);
    fsum.assign(static_cast<std::size_t>(n), 0.0);
    bsq.assign(static_cast<std::size_t>(n), 0.0);
    rep.lhs[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(n), 0.0);
    rep.rhs[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(n), 0.0);
    rep.ratio[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(n), 0.0);

    for (long node = 0; node < n; ++node) {
      double dz2 = 0.0;
      for (int i = 0; i < d; ++i) {
        const double dz = a.Z[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * d + i] -
                          b.Z[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * d + i];
        dz2 += dz * dz;
      }
      double du2 = 0.0;
      const auto kap = frame.mark_mass(k, node);
      for (int j = 0; j < m; ++j) {
        const double du = a.U[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * m + j] -
                          b.U[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * m + j];
        du2 += du * du * kap[static_cast<std::size_t>(j) + 1];
      }
      const double df = df_at ? df_at(k, node) : 0.0;

      double ez = dz2 * dt + du2, ef = df * df * dt, eb = 0.0;
      for (int bch = 0; bch < B; ++bch) {
        const double q = frame.probability(k, node, bch);
        const long c = LatticeModel::child_index(node, bch, B);
        ez += q * zsum_next[static_cast<std::size_t>(c)];
        ef += q * fsum_next[static_cast<std::size_t>(c)];
        eb += q * bsq_next[static_cast<std::size_t>(c)];
      }
      zsum[static_cast<std::size_t>(node)] = ez;
      fsum[static_cast<std::size_t>(node)] = ef;
      bsq[static_cast<std::size_t>(node)] = eb;

      const double sup = expected_path_sup(model, frame, dy2, k, node, 0.0);
      const double lhs = sup + ez;
      const double rhs = eb + ef;
      rep.lhs[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)] = lhs;
      rep.rhs[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)] = rhs;
      const double ratio = rhs > 0.0 ? lhs / rhs : 0.0;
      rep.ratio[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)] = ratio;
      rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
  }
  rep.root_ratio = rep.ratio[0][0];
  return rep;
}

}  // namespace bsdelab
