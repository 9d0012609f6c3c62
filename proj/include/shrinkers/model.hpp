#pragma once

// Radial backward self-similar profile equations of the compressible
// Navier-Stokes system, reduced to a first-order system in
// y = (P, U, U', Theta, Theta').

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "shrinkers/errors.hpp"

namespace shrinkers {

inline constexpr double kDefaultGuardEps = 1e-10;

/// Constitutive constants and spatial dimension.
struct PhysConsts {
  double c_v = 1.0;     // heat constant
  double r_gas = 1.0;   // ideal gas constant
  double kappa = 1.0;   // thermal conductivity
  double mu = 2.0;      // shear viscosity
  double lambda = 1.0;  // second Lame coefficient
  int d = 3;

  /// Longitudinal viscosity 2 mu + lambda.
  constexpr double nu() const noexcept { return 2.0 * mu + lambda; }

  /// Throws ConfigError unless mu > 0, 2 mu + d lambda >= 0, c_v, r_gas, kappa > 0, d >= 1.
  void validate() const {
    auto bad = [](const std::string& msg) { throw ConfigError("PhysConsts: " + msg); };
    if (!(std::isfinite(c_v) && std::isfinite(r_gas) && std::isfinite(kappa) && std::isfinite(mu) &&
          std::isfinite(lambda)))
      bad("constants must be finite");
    if (d < 1) bad("d must be >= 1");
    if (!(mu > 0.0)) bad("mu must be positive");
    if (!(2.0 * mu + d * lambda >= 0.0)) bad("2*mu + d*lambda must be non-negative");
    if (!(c_v > 0.0)) bad("c_v must be positive");
    if (!(r_gas > 0.0)) bad("r_gas must be positive");
    if (!(kappa > 0.0)) bad("kappa must be positive");
  }

  friend bool operator==(const PhysConsts&, const PhysConsts&) = default;
};

/// C_V = R = kappa = lambda = 1, mu = 2, d = 3: the set used for all published runs.
inline constexpr PhysConsts paper_constants() noexcept { return PhysConsts{}; }

/// Profile values at radius r. p and theta are expected non-negative but this is not enforced.
struct ProfileState {
  double r = 1.0;
  double p = 0.0;      // P
  double u = 0.0;      // U
  double v = 0.0;      // U'
  double theta = 0.0;  // Theta
  double s = 0.0;      // Theta'

  using Vector = std::array<double, 5>;

  constexpr Vector vec() const noexcept { return {p, u, v, theta, s}; }
  static constexpr ProfileState from(double r, const Vector& y) noexcept {
    return {r, y[0], y[1], y[2], y[3], y[4]};
  }
  bool finite() const noexcept {
    return std::isfinite(r) && std::isfinite(p) && std::isfinite(u) && std::isfinite(v) &&
           std::isfinite(theta) && std::isfinite(s);
  }

  friend bool operator==(const ProfileState&, const ProfileState&) = default;
};

/// d/dr of each ProfileState component.
struct RhsDerivative {
  double dp = 0.0;
  double du = 0.0;
  double dv = 0.0;
  double dtheta = 0.0;
  double ds = 0.0;

  constexpr ProfileState::Vector vec() const noexcept { return {dp, du, dv, dtheta, ds}; }
  bool finite() const noexcept {
    return std::isfinite(dp) && std::isfinite(du) && std::isfinite(dv) && std::isfinite(dtheta) &&
           std::isfinite(ds);
  }

  friend bool operator==(const RhsDerivative&, const RhsDerivative&) = default;
};

namespace detail {

inline void require_positive_radius(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("profile radius must be positive");
}

inline std::string describe(const ProfileState& st) {
  std::ostringstream os;
  os.precision(17);
  os << "(r=" << st.r << ", p=" << st.p << ", u=" << st.u << ", v=" << st.v
     << ", theta=" << st.theta << ", s=" << st.s << ")";
  return os.str();
}

}  // namespace detail

/// True when |r/2 + u| > guard_eps * r.
inline bool passes_guard(const ProfileState& st, double guard_eps = kDefaultGuardEps) noexcept {
  return std::abs(0.5 * st.r + st.u) > guard_eps * st.r;
}

/// Explicit first-order right-hand side.
///
/// P' comes from the continuity equation and is reused inside the momentum
/// equation, so the closure is a single consistent system. Throws
/// SingularityError when |r/2 + u| <= guard_eps * r and NonFiniteError when an
/// input or output component is not finite.
inline RhsDerivative rhs(const ProfileState& st, const PhysConsts& c,
                         double guard_eps = kDefaultGuardEps) {
  if (!st.finite()) throw NonFiniteError("rhs: non-finite state " + detail::describe(st));
  detail::require_positive_radius(st.r);
  const double r = st.r;
  const double a = 0.5 * r + st.u;
  if (!(std::abs(a) > guard_eps * r))
    throw SingularityError("rhs: r/2 + U vanishes at " + detail::describe(st), r);

  const double dm1 = static_cast<double>(c.d - 1);
  const double u_over_r = st.u / r;
  const double div = st.v + dm1 * u_over_r;  // U' + (d-1) U / r

  RhsDerivative out;
  out.dp = -st.p * div / a;
  out.du = st.v;
  out.dv = (0.5 * st.p * st.u + st.p * a * st.v + c.r_gas * (out.dp * st.theta + st.p * st.s)) / c.nu() -
           dm1 * st.v / r + dm1 * u_over_r / r;
  out.dtheta = st.s;
  const double heating = 2.0 * c.mu * (st.v * st.v + dm1 * u_over_r * u_over_r) + c.lambda * div * div;
  out.ds = (c.c_v * st.p * st.theta + c.c_v * st.p * a * st.s + c.r_gas * st.p * st.theta * div - heating) /
               c.kappa -
           dm1 * st.s / r;

  if (!out.finite()) throw NonFiniteError("rhs: non-finite derivative at " + detail::describe(st));
  return out;
}

namespace detail {

inline void require_finite(const ProfileState& st, const RhsDerivative& dv, const char* who) {
  if (!st.finite() || !dv.finite()) throw NonFiniteError(std::string(who) + ": non-finite input");
  require_positive_radius(st.r);
}

}  // namespace detail

/// 1/2 r P' + P' U + P (U' + (d-1) U / r).
inline double residual_continuity(const ProfileState& st, const RhsDerivative& dv, const PhysConsts& c) {
  detail::require_finite(st, dv, "residual_continuity");
  const double dm1 = static_cast<double>(c.d - 1);
  const double out = 0.5 * st.r * dv.dp + dv.dp * st.u + st.p * (st.v + dm1 * st.u / st.r);
  if (!std::isfinite(out)) throw NonFiniteError("residual_continuity: non-finite result");
  return out;
}

/// 1/2 P U + P (r/2 + U) U' + (P R Theta)' - (2mu+lambda)(U'' + (d-1)/r U' - (d-1)/r^2 U).
inline double residual_momentum(const ProfileState& st, const RhsDerivative& dv, const PhysConsts& c) {
  detail::require_finite(st, dv, "residual_momentum");
  const double r = st.r;
  const double dm1 = static_cast<double>(c.d - 1);
  const double pressure_grad = c.r_gas * (dv.dp * st.theta + st.p * st.s);
  const double viscous = c.nu() * (dv.dv + dm1 * st.v / r - dm1 * st.u / (r * r));
  const double out = 0.5 * st.p * st.u + st.p * (0.5 * r + st.u) * st.v + pressure_grad - viscous;
  if (!std::isfinite(out)) throw NonFiniteError("residual_momentum: non-finite result");
  return out;
}

/// Temperature equation, left side minus viscous heating.
inline double residual_temperature(const ProfileState& st, const RhsDerivative& dv, const PhysConsts& c) {
  detail::require_finite(st, dv, "residual_temperature");
  const double r = st.r;
  const double dm1 = static_cast<double>(c.d - 1);
  const double div = st.v + dm1 * st.u / r;
  const double lhs = c.c_v * st.p * st.theta + 0.5 * c.c_v * r * st.p * st.s + c.c_v * st.p * st.u * st.s +
                     st.p * c.r_gas * st.theta * div - c.kappa * (dv.ds + dm1 * st.s / r);
  const double heating = 2.0 * c.mu * (st.v * st.v + dm1 * st.u * st.u / (r * r)) + c.lambda * div * div;
  const double out = lhs - heating;
  if (!std::isfinite(out)) throw NonFiniteError("residual_temperature: non-finite result");
  return out;
}

/// Adapts rhs() to the integrator's (r, y) -> y' signature.
struct ProfileRhs {
  PhysConsts consts;
  double guard_eps = kDefaultGuardEps;

  ProfileState::Vector operator()(double r, const ProfileState::Vector& y) const {
    return rhs(ProfileState::from(r, y), consts, guard_eps).vec();
  }
};

}  // namespace shrinkers
