#pragma once

// Launch data at r = delta for the cavitating and smooth regimes.

#include <cmath>
#include <string>

#include "shrinkers/errors.hpp"
#include "shrinkers/model.hpp"

namespace shrinkers {

inline constexpr double kDefaultCavitatingDelta = 1e-3;
inline constexpr double kDefaultSmoothDelta = 1e-5;

/// How the cavitating velocity parameter alpha seeds U at delta.
enum class VelocitySeed {
  AlphaSlope,     // U(delta) = -alpha * delta, U'(delta) = -alpha
  FixedVelocity,  // U(delta) = -alpha,         U'(delta) = -alpha
};

struct CavitatingParams {
  double delta = kDefaultCavitatingDelta;
  double p_delta = 1.0;
  double alpha = 0.1;
  double theta0 = 1.0;

  void validate() const {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("CavitatingParams: delta must be positive");
    if (!(p_delta > 0.0) || !std::isfinite(p_delta))
      throw ConfigError("CavitatingParams: p_delta must be positive");
    if (!std::isfinite(alpha) || !std::isfinite(theta0)) throw ConfigError("CavitatingParams: non-finite value");
  }
};

struct SmoothParams {
  double delta = kDefaultSmoothDelta;
  double p0 = 1.0;
  double theta0 = 1.0;

  void validate() const {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("SmoothParams: delta must be positive");
    if (!(p0 > 0.0) || !std::isfinite(p0)) throw ConfigError("SmoothParams: p0 must be positive");
    if (!(theta0 > 0.0) || !std::isfinite(theta0)) throw ConfigError("SmoothParams: theta0 must be positive");
  }
};

/// (delta, P_delta, -alpha*delta, -alpha, Theta_0, 0), or U(delta) = -alpha under FixedVelocity.
inline ProfileState cavitating_state(const CavitatingParams& prm, VelocitySeed seed = VelocitySeed::AlphaSlope) {
  prm.validate();
  // + 0.0 turns -0.0 into +0.0 when alpha == 0.
  const double u = (seed == VelocitySeed::AlphaSlope ? -prm.alpha * prm.delta : -prm.alpha) + 0.0;
  return {prm.delta, prm.p_delta, u, -prm.alpha + 0.0, prm.theta0, 0.0};
}

/// Leading coefficients of U ~ A r^3 and Theta ~ Theta_0 + B r^2 near the origin.
struct SmoothCoefficients {
  double a = 0.0;
  double b = 0.0;
};

inline SmoothCoefficients smooth_coefficients(double p0, double theta0, const PhysConsts& c) noexcept {
  const double a = c.r_gas * p0 * p0 * theta0 * c.c_v / (30.0 * c.kappa * (c.nu() + c.r_gas * p0 * theta0));
  const double b = c.c_v * p0 * theta0 / (6.0 * c.kappa);
  return {a, b};
}

/// Truncated smooth expansion at delta, with derivative seeds from differentiating it.
inline ProfileState smooth_state(const SmoothParams& prm, const PhysConsts& consts) {
  prm.validate();
  consts.validate();
  const auto [a, b] = smooth_coefficients(prm.p0, prm.theta0, consts);
  const double d = prm.delta;
  const double d2 = d * d;
  return {d, prm.p0, a * d2 * d, 3.0 * a * d2, prm.theta0 + b * d2, 2.0 * b * d};
}

}  // namespace shrinkers
