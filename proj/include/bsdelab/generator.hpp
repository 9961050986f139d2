#pragma once

// BSDE drivers. Every driver has the split form
//   f(t,y,z,u) = fhat(t,y,z) + sum_j g(u_j) * (mark mass_j / dt),
// with the mark masses supplied by the measure frame the solve runs under.

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsdelab/errors.hpp"

namespace bsdelab {

/// (e^{alpha*u} - 1)/alpha - u. Nonnegative, convex, zero at zero.
/// Guards the exponent so a runaway argument fails loudly instead of NaN-ing.
double entropic_jump_integrand(double alpha, double u);

/// h(u) = g(u)/u continued by h(0)=0; satisfies h > -1. Stable near zero via
/// a series branch.
double entropic_tilt_ratio(double alpha, double u);

struct TruncationProfile {
  double k1 = 0.0;  // bound on |fhat|
  double k2 = 0.0;  // growth of fhat in |y|
  double k3 = 0.0;  // terminal bound
};

/// Time-dependent clamp level: k3 + k1*(T-t) when k2 = 0, else
/// k3*e^{k2(T-t)} + (k1/k2)(e^{k2(T-t)} - 1). Nonincreasing in t.
double truncation_boundary(double t, const TruncationProfile& profile, double horizon);

/// Clamp of y to [-b(t), b(t)]; idempotent.
double truncate(double t, double y, const TruncationProfile& profile, double horizon);

/// Context handed to a driver at evaluation time.
struct GeneratorContext {
  double t = 0.0;
  int time_index = 0;
  long node = 0;
  std::span<const double> phi;        // market price of risk at the node
  std::span<const double> mark_mass;  // kappa_j of the solve frame (index 0 = no-jump slot unused here)
  double dt = 1.0;
};

class GeneratorSpec {
 public:
  enum class Kind { Zero, LipschitzAffine, Entropic, EntropicPhysical, Indifference, Custom };

  static GeneratorSpec zero();
  /// f = a + b*y + c.z + sum_j d_j u_j kappa_j/dt, globally Lipschitz.
  static GeneratorSpec lipschitz_affine(double a, double b, std::vector<double> c, double d_jump);
  /// Drift-free frame: fhat = -|phi|^2/(2 alpha); jump part entropic.
  static GeneratorSpec entropic(double alpha);
  /// Physical frame: fhat = -z.phi - |phi|^2/(2 alpha); jump part entropic.
  static GeneratorSpec entropic_physical(double alpha);
  /// Zero fhat, entropic jump part (used against the entropy-tilted frame).
  static GeneratorSpec indifference(double alpha);
  static GeneratorSpec custom(std::function<double(const GeneratorContext&, double, std::span<const double>, std::span<const double>)> f,
                              double lipschitz, std::string label);

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  const std::string& label() const { return label_; }

  /// Full driver value. u has one entry per mark.
  double value(const GeneratorContext& ctx, double y, std::span<const double> z,
               std::span<const double> u) const;

  /// The y/z part alone (no jump integral).
  double fhat(const GeneratorContext& ctx, double y, std::span<const double> z) const;
  /// The scalar jump integrand g applied to one u.
  double jump_g(double u) const;
  bool has_jump_part() const;

  /// Declared Lipschitz constant where meaningful (affine/custom kinds).
  double lipschitz_constant() const { return lipschitz_; }
  /// Growth constants of fhat for the truncated route; throws when the kind
  /// does not supply them and none were set.
  TruncationProfile growth_profile(double terminal_bound, double max_phi_norm) const;

  /// Same driver with every y and y+u argument clamped to the moving band.
  /// Agrees with the original whenever |y| and |y+u| are inside the band.
  GeneratorSpec truncated(const TruncationProfile& profile, double horizon) const;

 private:
  Kind kind_ = Kind::Zero;
  double alpha_ = 1.0;
  double affine_a_ = 0.0, affine_b_ = 0.0, affine_d_ = 0.0;
  std::vector<double> affine_c_;
  double lipschitz_ = 0.0;
  std::string label_ = "zero";
  std::function<double(const GeneratorContext&, double, std::span<const double>, std::span<const double>)> custom_;
  // Truncation wrapper state.
  bool truncated_ = false;
  TruncationProfile profile_{};
  double horizon_ = 0.0;
};

}  // namespace bsdelab
