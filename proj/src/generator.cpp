#include "bsdelab/generator.hpp"

#include <algorithm>

namespace bsdelab {

double entropic_jump_integrand(double alpha, double u) {
  if (!(alpha > 0.0)) throw NumericalError("entropic integrand needs alpha > 0");
  const double x = alpha * u;
  if (std::fabs(x) > 700.0)
    throw NumericalError("entropic integrand overflow guard: |alpha*u| = " + std::to_string(std::fabs(x)) +
                         " > 700 (unbounded jump integrand argument)");
  if (std::fabs(x) < 1e-5) {
    // g(u) = u*x/2 * (1 + x/3 + x^2/12 + ...) keeps full precision near zero.
    return u * x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)));
  }
  return std::expm1(x) / alpha - u;
}

double entropic_tilt_ratio(double alpha, double u) {
  const double x = alpha * u;
  if (std::fabs(x) < 1e-6) {
    return x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0)));
  }
  return entropic_jump_integrand(alpha, u) / u;
}

double truncation_boundary(double t, const TruncationProfile& p, double horizon) {
  const double tau = horizon - t;
  if (p.k2 == 0.0) return p.k3 + p.k1 * tau;
  const double e = std::exp(p.k2 * tau);
  return p.k3 * e + (p.k1 / p.k2) * (e - 1.0);
}

double truncate(double t, double y, const TruncationProfile& p, double horizon) {
  const double b = truncation_boundary(t, p, horizon);
  return std::min(std::max(y, -b), b);
}

GeneratorSpec GeneratorSpec::zero() {
  GeneratorSpec g;
  g.kind_ = Kind::Zero;
  g.label_ = "zero";
  return g;
}

GeneratorSpec GeneratorSpec::lipschitz_affine(double a, double b, std::vector<double> c, double d_jump) {
  GeneratorSpec g;
  g.kind_ = Kind::LipschitzAffine;
  g.affine_a_ = a;
  g.affine_b_ = b;
  g.affine_c_ = std::move(c);
  g.affine_d_ = d_jump;
  double cn = 0.0;
  for (double x : g.affine_c_) cn += x * x;
  g.lipschitz_ = std::max({std::fabs(b), std::sqrt(cn), std::fabs(d_jump)});
  g.label_ = "affine";
  return g;
}

GeneratorSpec GeneratorSpec::entropic(double alpha) {
  GeneratorSpec g;
  g.kind_ = Kind::Entropic;
  g.alpha_ = alpha;
  g.label_ = "entropic";
  return g;
}

GeneratorSpec GeneratorSpec::entropic_physical(double alpha) {
  GeneratorSpec g;
  g.kind_ = Kind::EntropicPhysical;
  g.alpha_ = alpha;
  g.label_ = "entropic-physical";
  return g;
}

GeneratorSpec GeneratorSpec::indifference(double alpha) {
  GeneratorSpec g;
  g.kind_ = Kind::Indifference;
  g.alpha_ = alpha;
  g.label_ = "indifference";
  return g;
}

GeneratorSpec GeneratorSpec::custom(
    std::function<double(const GeneratorContext&, double, std::span<const double>, std::span<const double>)> f,
    double lipschitz, std::string label) {
  GeneratorSpec g;
  g.kind_ = Kind::Custom;
  g.custom_ = std::move(f);
  g.lipschitz_ = lipschitz;
  g.label_ = std::move(label);
  return g;
}

double GeneratorSpec::fhat(const GeneratorContext& ctx, double y, std::span<const double> z) const {
  switch (kind_) {
    case Kind::Zero:
    case Kind::Indifference:
      return 0.0;
    case Kind::LipschitzAffine: {
      double s = affine_a_ + affine_b_ * y;
      for (std::size_t i = 0; i < affine_c_.size() && i < z.size(); ++i) s += affine_c_[i] * z[i];
      return s;
    }
    case Kind::Entropic: {
      double p2 = 0.0;
      for (double p : ctx.phi) p2 += p * p;
      return -p2 / (2.0 * alpha_);
    }
    case Kind::EntropicPhysical: {
      double p2 = 0.0, zp = 0.0;
      for (std::size_t i = 0; i < ctx.phi.size(); ++i) {
        p2 += ctx.phi[i] * ctx.phi[i];
        zp += z[i] * ctx.phi[i];
      }
      return -zp - p2 / (2.0 * alpha_);
    }
    case Kind::Custom:
      return 0.0;  // custom kinds evaluate whole
  }
  return 0.0;
}

double GeneratorSpec::jump_g(double u) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::LipschitzAffine:
      return affine_d_ * u;
    case Kind::Entropic:
    case Kind::EntropicPhysical:
    case Kind::Indifference:
      return entropic_jump_integrand(alpha_, u);
    case Kind::Custom:
      return 0.0;
  }
  return 0.0;
}

bool GeneratorSpec::has_jump_part() const {
  return kind_ == Kind::LipschitzAffine || kind_ == Kind::Entropic ||
         kind_ == Kind::EntropicPhysical || kind_ == Kind::Indifference;
}

double GeneratorSpec::value(const GeneratorContext& ctx, double y, std::span<const double> z,
                            std::span<const double> u) const {
  if (kind_ == Kind::Custom) {
    if (!truncated_) return custom_(ctx, y, z, u);
    const double yk = truncate(ctx.t, y, profile_, horizon_);
    std::vector<double> uk(u.size());
    for (std::size_t j = 0; j < u.size(); ++j)
      uk[j] = truncate(ctx.t, y + u[j], profile_, horizon_) - yk;
    return custom_(ctx, yk, z, uk);
  }

  double yk = y;
  if (truncated_) yk = truncate(ctx.t, y, profile_, horizon_);
  double s = fhat(ctx, yk, z);
  if (has_jump_part()) {
    for (std::size_t j = 0; j < u.size(); ++j) {
      double uj = u[j];
      if (truncated_) uj = truncate(ctx.t, y + u[j], profile_, horizon_) - yk;
      // mark_mass is kappa_j = zeta_j*lambda_j*dt; the driver integrates g against
      // zeta*lambda, so divide the dt back out.
      s += jump_g(uj) * ctx.mark_mass[j + 1] / ctx.dt;
    }
  }
  return s;
}

TruncationProfile GeneratorSpec::growth_profile(double terminal_bound, double max_phi_norm) const {
  TruncationProfile p;
  p.k3 = terminal_bound;
  switch (kind_) {
    case Kind::Zero:
    case Kind::Indifference:
      p.k1 = 0.0;
      p.k2 = 0.0;
      return p;
    case Kind::Entropic:
      // fhat carries no y and, in the drift-free frame, no z either.
      p.k1 = max_phi_norm * max_phi_norm / (2.0 * alpha_);
      p.k2 = 0.0;
      return p;
    case Kind::EntropicPhysical:
      // The z-linear term breaks the flat growth bound; the bounded route is
      // a drift-free-frame construction.
      throw NumericalError("bounded route requires the drift-free frame");
    case Kind::LipschitzAffine:
      p.k1 = std::fabs(affine_a_);
      p.k2 = std::fabs(affine_b_);
      return p;
    case Kind::Custom:
      throw NumericalError("custom generator: growth constants for the truncated route not supplied");
  }
  return p;
}

GeneratorSpec GeneratorSpec::truncated(const TruncationProfile& profile, double horizon) const {
  GeneratorSpec g = *this;
  g.truncated_ = true;
  g.profile_ = profile;
  g.horizon_ = horizon;
  g.label_ = label_ + "+truncated";
  return g;
}

}  // namespace bsdelab
