#include "bsdelab/markov.hpp"

#include <cmath>
#include <vector>

#include "bsdelab/generator.hpp"

namespace bsdelab {
namespace {

struct Constants {
  double dt, sdt, phi, sigma, s0;
  double kappa;      // jump mass per step (at most one mark)
  int marks;         // 0 or 1
  double up, down;   // multiplicative asset factors
  std::vector<double> mark_vector;
};

Constants extract_constants(const ModelConfig& cfg, int steps) {
  if (cfg.asset_count != 1) throw ConfigError("recombining solver needs one asset");
  if (cfg.marks.count() > 1) throw ConfigError("recombining solver needs at most one mark");
  if (cfg.phi.kind != CoefficientSpec::Kind::Constant ||
      cfg.sigma.kind != CoefficientSpec::Kind::Constant ||
      (cfg.marks.count() > 0 && cfg.zeta.kind != CoefficientSpec::Kind::Constant))
    throw ConfigError("recombining solver needs constant coefficients");
  Constants c;
  c.dt = cfg.grid.horizon / steps;
  c.sdt = std::sqrt(c.dt);
  c.phi = cfg.phi.values[0][0];
  c.sigma = cfg.sigma.values[0][0];
  c.s0 = cfg.initial_price[0];
  c.marks = cfg.marks.count();
  c.kappa = 0.0;
  if (c.marks == 1) {
    c.kappa = cfg.zeta.values[0][0] * cfg.marks.marks[0].weight * c.dt;
    if (!(c.kappa < 1.0)) throw ConfigError("recombining solver: jump mass per step >= 1");
    c.mark_vector = cfg.marks.marks[0].vector;
  }
  c.up = 1.0 + c.sigma * (c.phi * c.dt + c.sdt);
  c.down = 1.0 + c.sigma * (c.phi * c.dt - c.sdt);
  if (!(c.up > 0.0) || !(c.down > 0.0)) throw ConfigError("recombining solver: step too coarse");
  return c;
}

}  // namespace

MarkovPoint markov_solve(const ModelConfig& config, int steps, const ClaimExpr& claim,
                         double alpha) {
  const Constants c = extract_constants(config, steps);
  const int N = steps;
  const int jdim = c.marks == 1 ? N + 1 : 1;
  auto idx = [&](int u, int j) { return static_cast<std::size_t>(u) * jdim + j; };

  // Terminal values from the recombined state.
  std::vector<double> terminal(static_cast<std::size_t>(N + 1) * jdim);
  for (int u = 0; u <= N; ++u) {
    const double sT = c.s0 * std::pow(c.up, u) * std::pow(c.down, N - u);
    for (int j = 0; j < jdim; ++j) {
      TerminalState st;
      st.assets = {sT};
      st.jump_counts.assign(static_cast<std::size_t>(c.marks), j);
      st.mark_sum.assign(std::max<std::size_t>(c.mark_vector.size(), 1), 0.0);
      for (std::size_t q = 0; q < c.mark_vector.size(); ++q)
        st.mark_sum[q] = j * c.mark_vector[q];
      terminal[idx(u, j)] = claim.eval(st);
    }
  }

  const double dwp = c.sdt + c.phi * c.dt;   // drift-adjusted up increment
  const double dwm = -c.sdt + c.phi * c.dt;  // drift-adjusted down increment
  const double hat_up = 0.5 * (1.0 - c.phi * c.sdt);  // drift-free weights
  const double hat_dn = 0.5 * (1.0 + c.phi * c.sdt);
  if (!(hat_up > 0.0) || !(hat_dn > 0.0)) throw ConfigError("recombining solver: phi step bound violated");

  MarkovPoint out;
  out.steps = N;
  const GeneratorSpec gen = GeneratorSpec::entropic(alpha);

  // Compensated (drift-free frame) sweep.
  {
    std::vector<double> val = terminal;
    std::vector<double> next;
    double root_theta = 0.0;
    for (int k = N - 1; k >= 0; --k) {
      next = std::move(val);
      val.assign(static_cast<std::size_t>(N + 1) * jdim, 0.0);
      for (int u = 0; u <= k; ++u) {
        const int jmax = c.marks == 1 ? k : 0;
        for (int j = 0; j <= jmax; ++j) {
          const double vpp = next[idx(u + 1, c.marks ? j : 0)];
          const double vmp = next[idx(u, c.marks ? j : 0)];
          const double vpj = c.marks ? next[idx(u + 1, j + 1)] : 0.0;
          const double vmj = c.marks ? next[idx(u, j + 1)] : 0.0;
          const double wu = hat_up * (1.0 - c.kappa), wd = hat_dn * (1.0 - c.kappa);
          const double wuj = hat_up * c.kappa, wdj = hat_dn * c.kappa;
          const double mean = wu * vpp + wd * vmp + wuj * vpj + wdj * vmj;
          // Centered regression of the values on the drift-adjusted increment.
          const double dbar = wu * dwp + wd * dwm + wuj * dwp + wdj * dwm;
          double num = 0.0, den = 0.0;
          const double dev_p = dwp - dbar, dev_m = dwm - dbar;
          num += (wu * vpp + wuj * vpj) * dev_p + (wd * vmp + wdj * vmj) * dev_m;
          num -= mean * (wu * dev_p + wd * dev_m + wuj * dev_p + wdj * dev_m);
          den = (wu + wuj) * dev_p * dev_p + (wd + wdj) * dev_m * dev_m;
          const double z = num / den;
          double uval = 0.0;
          if (c.marks == 1) {
            const double jumpmean = hat_up * vpj + hat_dn * vmj;
            const double nomean = hat_up * vpp + hat_dn * vmp;
            uval = jumpmean - nomean;
          }
          GeneratorContext ctx;
          ctx.t = config.grid.horizon * k / N;
          ctx.dt = c.dt;
          const double phi_arr[1] = {c.phi};
          const double mass_arr[2] = {1.0 - c.kappa, c.kappa};
          ctx.phi = {phi_arr, 1};
          ctx.mark_mass = {mass_arr, static_cast<std::size_t>(c.marks + 1)};
          const double zs[1] = {z};
          const double us[1] = {uval};
          val[idx(u, j)] = mean + gen.value(ctx, mean, {zs, 1}, {us, static_cast<std::size_t>(c.marks)}) * c.dt;
          if (k == 0 && u == 0 && j == 0) root_theta = z + c.phi / alpha;
        }
      }
    }
    out.euler_y0 = val[idx(0, 0)];
    out.euler_theta0 = root_theta;
  }

  // Exact recursion under the physical weights.
  {
    std::vector<double> val = terminal;
    std::vector<double> next;
    double root_theta = 0.0;
    for (int k = N - 1; k >= 0; --k) {
      next = std::move(val);
      val.assign(static_cast<std::size_t>(N + 1) * jdim, 0.0);
      for (int u = 0; u <= k; ++u) {
        const int jmax = c.marks == 1 ? k : 0;
        for (int j = 0; j <= jmax; ++j) {
          const double w[4] = {0.5 * (1.0 - c.kappa), 0.5 * (1.0 - c.kappa), 0.5 * c.kappa,
                               0.5 * c.kappa};
          const double y[4] = {next[idx(u + 1, c.marks ? j : 0)], next[idx(u, c.marks ? j : 0)],
                               c.marks ? next[idx(u + 1, j + 1)] : 0.0,
                               c.marks ? next[idx(u, j + 1)] : 0.0};
          const double drv[4] = {dwp, dwm, dwp, dwm};
          const int nb = c.marks == 1 ? 4 : 2;
          double theta = c.phi / alpha;
          for (int it = 0; it < 80; ++it) {
            double mx = -1e300;
            for (int b = 0; b < nb; ++b) mx = std::max(mx, alpha * (y[b] - theta * drv[b]));
            double zsum = 0.0, mean = 0.0, second = 0.0;
            for (int b = 0; b < nb; ++b) {
              const double ww = w[b] * std::exp(alpha * (y[b] - theta * drv[b]) - mx);
              zsum += ww;
              mean += ww * drv[b];
              second += ww * drv[b] * drv[b];
            }
            mean /= zsum;
            const double var = second / zsum - mean * mean;
            if (std::fabs(mean) <= 1e-14) break;
            theta += mean / (alpha * var);
          }
          double mx = -1e300;
          for (int b = 0; b < nb; ++b) mx = std::max(mx, alpha * (y[b] - theta * drv[b]));
          double zsum = 0.0;
          for (int b = 0; b < nb; ++b) zsum += w[b] * std::exp(alpha * (y[b] - theta * drv[b]) - mx);
          val[idx(u, j)] = (mx + std::log(zsum)) / alpha;
          if (k == 0 && u == 0 && j == 0) root_theta = theta;
        }
      }
    }
    out.dp_y0 = val[idx(0, 0)];
    out.dp_theta0 = root_theta;
  }
  return out;
}

}  // namespace bsdelab
