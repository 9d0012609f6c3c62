#pragma once

// Analytic diagnostics evaluated along a computed (or synthetic) profile:
// the Z/W weights, the smallness functional, finite-energy integrals, the
// continuity quadrature oracle and tail fits toward P_inf, U_inf, Theta_inf.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shrinkers/errors.hpp"
#include "shrinkers/integrator.hpp"
#include "shrinkers/model.hpp"
#include "shrinkers/profile_trajectory.hpp"
#include "shrinkers/quadrature.hpp"

namespace shrinkers {

/// Anything that can be evaluated as a profile on [r_begin, r_end].
template <class S>
concept ProfileSource = requires(const S& s, double r) {
  { s.r_begin() } -> std::convertible_to<double>;
  { s.r_end() } -> std::convertible_to<double>;
  { s.initial() } -> std::convertible_to<ProfileState>;
  { s.state_at(r) } -> std::convertible_to<ProfileState>;
  { s.breakpoints() } -> std::convertible_to<std::vector<double>>;
  { s.termination() } -> std::convertible_to<TerminationKind>;
};

static_assert(ProfileSource<ProfileTrajectory>);

/// Closed-form synthetic profile, used to test diagnostics against exact integrals.
class FunctionProfile {
public:
  using Fn = std::function<ProfileState(double)>;

  FunctionProfile(double r_begin, double r_end, Fn fn, int panels = 64,
                  TerminationKind term = {Termination::ReachedRMax, 0.0})
      : r0_(r_begin), r1_(r_end), fn_(std::move(fn)), panels_(std::max(panels, 1)), term_(term) {
    if (!(r_begin > 0.0) || !(r_end >= r_begin)) throw std::invalid_argument("FunctionProfile: bad range");
    if (term_.r == 0.0) term_.r = r_end;
  }

  double r_begin() const noexcept { return r0_; }
  double r_end() const noexcept { return r1_; }
  ProfileState initial() const { return state_at(r0_); }
  TerminationKind termination() const noexcept { return term_; }

  ProfileState state_at(double r) const {
    if (!(r >= r0_ && r <= r1_)) throw OutOfRangeError("FunctionProfile: radius outside range");
    ProfileState st = fn_(r);
    st.r = r;
    return st;
  }

  std::vector<double> breakpoints() const {
    std::vector<double> out{r0_};
    if (r1_ == r0_) return out;
    for (int i = 1; i < panels_; ++i) out.push_back(r0_ + (r1_ - r0_) * i / panels_);
    out.push_back(r1_);
    return out;
  }

private:
  double r0_;
  double r1_;
  Fn fn_;
  int panels_;
  TerminationKind term_;
};

/// Wraps a source and multiplies P by `factor` for r > r_begin, leaving the launch value intact.
template <ProfileSource S>
class CorruptedDensity {
public:
  CorruptedDensity(const S& inner, double factor) : inner_(inner), factor_(factor) {}
  double r_begin() const { return inner_.r_begin(); }
  double r_end() const { return inner_.r_end(); }
  ProfileState initial() const { return inner_.initial(); }
  TerminationKind termination() const { return inner_.termination(); }
  std::vector<double> breakpoints() const { return inner_.breakpoints(); }
  ProfileState state_at(double r) const {
    ProfileState st = inner_.state_at(r);
    if (r > inner_.r_begin()) st.p *= factor_;
    return st;
  }

private:
  const S& inner_;
  double factor_;
};

struct DiagnosticsConfig {
  double gamma = 4.0;
  double quad_rtol = 1e-8;
  double tail_window = 0.2;

  void validate(int d) const {
    if (!(gamma > d)) throw ConfigError("DiagnosticsConfig: gamma must exceed the dimension d");
    if (!(quad_rtol > 0.0)) throw ConfigError("DiagnosticsConfig: quad_rtol must be positive");
    if (!(tail_window > 0.0 && tail_window < 1.0))
      throw ConfigError("DiagnosticsConfig: tail_window must lie in (0, 1)");
  }
};

namespace detail {

/// Breakpoints restricted to [lo, hi], with lo and hi included.
inline std::vector<double> knots_between(std::span<const double> bp, double lo, double hi) {
  std::vector<double> out{lo};
  for (double x : bp)
    if (x > lo && x < hi) out.push_back(x);
  if (hi > lo) out.push_back(hi);
  return out;
}

template <ProfileSource S, class G>
double integrate_range(const S& src, std::span<const double> bp, double lo, double hi, double rtol, const G& g) {
  if (hi <= lo) return 0.0;
  const auto knots = knots_between(bp, lo, hi);
  return quad::integrate_panels([&](double r) { return g(src.state_at(r)); }, knots, rtol);
}

/// Uniform radii on [lo, hi]; n == 1 gives {hi}.
inline std::vector<double> uniform_radii(double lo, double hi, int n) {
  std::vector<double> out;
  if (n <= 1) return {hi};
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(i + 1 == n ? hi : lo + (hi - lo) * i / (n - 1));
  return out;
}

/// Dense samples: every breakpoint plus `interior` equispaced points inside each panel.
template <ProfileSource S>
std::vector<ProfileState> dense_samples(const S& src, int interior = 8) {
  const auto bp = src.breakpoints();
  std::vector<ProfileState> out;
  out.push_back(src.state_at(bp.front()));
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    for (int k = 1; k <= interior; ++k) out.push_back(src.state_at(bp[i] + (bp[i + 1] - bp[i]) * k / (interior + 1)));
    out.push_back(src.state_at(bp[i + 1]));
  }
  return out;
}

}  // namespace detail

/// Surface measure of the unit sphere, 2 pi^{d/2} / Gamma(d/2); omega_1 = 2.
inline double sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

// ---------------------------------------------------------------------------
// Z and W weights

struct WeightSamples {
  std::vector<double> radii;
  std::vector<double> z;
  std::vector<double> w;
  /// Contribution of [0, delta] to the common integral, from the launch ansatz.
  double origin_correction = 0.0;
};

/// Integral of P (r/2 + U) over [0, delta] assuming P = P(delta) and U a power law through the launch data.
inline double origin_weight_integral(const ProfileState& launch) {
  const double d = launch.r;
  double tail = 0.0;
  if (launch.u != 0.0) {
    double m = d * launch.v / launch.u;
    if (!std::isfinite(m) || m <= -1.0 + 1e-12) m = 0.0;
    tail = launch.u * d / (m + 1.0);
  }
  return launch.p * (0.25 * d * d + tail);
}

/// Z(r) = C_V/kappa * int_0^r P (r1/2 + U) dr1 and W(r) = same / (2 mu + lambda), at `samples` uniform radii.
template <ProfileSource S>
WeightSamples weights(const S& src, const PhysConsts& c, int samples, double quad_rtol = 1e-8) {
  if (samples < 1) throw std::invalid_argument("weights: samples must be >= 1");
  const auto bp = src.breakpoints();
  WeightSamples out;
  out.origin_correction = origin_weight_integral(src.initial());
  out.radii = detail::uniform_radii(src.r_begin(), src.r_end(), samples);
  const double zc = c.c_v / c.kappa;
  const double wc = 1.0 / c.nu();
  double acc = out.origin_correction;
  double prev = src.r_begin();
  for (double r : out.radii) {
    acc += detail::integrate_range(src, bp, prev, r, quad_rtol,
                                   [](const ProfileState& st) { return st.p * (0.5 * st.r + st.u); });
    prev = r;
    out.z.push_back(zc * acc);
    out.w.push_back(wc * acc);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Smallness functional

struct SmallnessTerms {
  double temperature = 0.0;  // P Theta / min(nu, kappa)
  double velocity = 0.0;     // P r |U| / max(nu, kappa)
};

inline SmallnessTerms smallness_terms(const ProfileState& st, const PhysConsts& c) noexcept {
  const double nu = c.nu();
  return {st.p * st.theta / std::min(nu, c.kappa), st.p * st.r * std::abs(st.u) / std::max(nu, c.kappa)};
}

/// (gamma + nu/kappa)^{ln gamma}.
inline double smallness_amplifier(double gamma, const PhysConsts& c) {
  return std::pow(gamma + c.nu() / c.kappa, std::log(gamma));
}

struct SmallnessReport {
  double value = 0.0;
  double sup_terms = 0.0;
  double r_lo = 0.0;
  double r_hi = 0.0;
};

/// Supremum of the summed terms over the given samples times the gamma amplifier.
inline SmallnessReport smallness_functional(std::span<const ProfileState> samples, const PhysConsts& c,
                                            double gamma) {
  if (!(gamma > c.d)) throw ConfigError("smallness_functional: gamma must exceed d");
  if (samples.empty()) throw std::invalid_argument("smallness_functional: no samples");
  SmallnessReport rep;
  rep.sup_terms = -std::numeric_limits<double>::infinity();
  rep.r_lo = samples.front().r;
  rep.r_hi = samples.front().r;
  for (const auto& st : samples) {
    const auto t = smallness_terms(st, c);
    rep.sup_terms = std::max(rep.sup_terms, t.temperature + t.velocity);
    rep.r_lo = std::min(rep.r_lo, st.r);
    rep.r_hi = std::max(rep.r_hi, st.r);
  }
  rep.value = rep.sup_terms * smallness_amplifier(gamma, c);
  return rep;
}

/// Sup over dense-output samples of the computed range only.
template <ProfileSource S>
SmallnessReport smallness_functional(const S& src, const PhysConsts& c, const DiagnosticsConfig& cfg) {
  const auto samples = detail::dense_samples(src);
  return smallness_functional(std::span<const ProfileState>(samples), c, cfg.gamma);
}

// ---------------------------------------------------------------------------
// Finite-energy integrals

struct EnergyIntegral {
  std::string name;
  double value = 0.0;
  bool divergent = false;
};

struct EnergyReport {
  std::vector<EnergyIntegral> integrals;
  EnergyIntegral identity_d{"identity_d", 0.0, false};
  double r_lo = 0.0;
  double r_hi = 0.0;

  const EnergyIntegral& at(const std::string& name) const {
    for (const auto& e : integrals)
      if (e.name == name) return e;
    if (name == identity_d.name) return identity_d;
    throw std::out_of_range("EnergyReport: no integral named " + name);
  }
};

template <ProfileSource S>
EnergyReport energy_report(const S& src, const PhysConsts& c, const DiagnosticsConfig& cfg) {
  const auto bp = src.breakpoints();
  const double lo = src.r_begin();
  const double hi = src.r_end();
  const double omega = sphere_area(c.d);
  const double dm1 = static_cast<double>(c.d - 1);
  const double q = cfg.quad_rtol;

  auto measure = [&](auto density) {
    return [=, &c](const ProfileState& st) { return density(st) * omega * std::pow(st.r, c.d - 1); };
  };
  const double mid = std::max(lo, 0.5 * hi);
  const double quarter = std::max(lo, 0.25 * hi);
  auto dyadic = [&](auto g) {
    const double head = detail::integrate_range(src, bp, lo, quarter, q, g);
    const double prev = detail::integrate_range(src, bp, quarter, mid, q, g);
    const double last = detail::integrate_range(src, bp, mid, hi, q, g);
    return std::array<double, 3>{head, prev, last};
  };
  // Divergent when the last dyadic shell contributes at least as much as the previous one.
  auto flagged = [&](const std::string& name, auto density) {
    const auto parts = dyadic(measure(density));
    const bool div = parts[2] > 0.0 && parts[2] >= parts[1];
    return EnergyIntegral{name, parts[0] + parts[1] + parts[2], div};
  };

  EnergyReport rep;
  rep.r_lo = lo;
  rep.r_hi = hi;
  rep.integrals.push_back(flagged("theta", [](const ProfileState& s) { return std::abs(s.theta); }));
  rep.integrals.push_back(flagged("p_theta", [](const ProfileState& s) { return s.p * std::abs(s.theta); }));
  rep.integrals.push_back(
      flagged("p_theta_u", [](const ProfileState& s) { return s.p * std::abs(s.theta * s.u); }));
  rep.integrals.push_back(flagged("p_u2", [](const ProfileState& s) { return s.p * s.u * s.u; }));
  rep.integrals.push_back(flagged("h1_u", [dm1](const ProfileState& s) {
    return s.u * s.u + s.v * s.v + dm1 * s.u * s.u / (s.r * s.r);
  }));

  // (1/R) int p |u|^3: the surrogate for the eps -> 0 cubic limit with eps = 1/R.
  {
    const auto parts = dyadic(measure([](const ProfileState& s) { return s.p * std::abs(s.u * s.u * s.u); }));
    const double full = parts[0] + parts[1] + parts[2];
    const double half = parts[0] + parts[1];
    const double scaled = hi > 0.0 ? full / hi : 0.0;
    const double scaled_half = mid > lo ? half / mid : 0.0;
    rep.integrals.push_back({"scaled_p_u3", scaled, scaled > 0.0 && scaled >= scaled_half});
  }

  // (1 - d/2) int P (C_V Theta + U^2/2); identically zero for d = 2.
  if (c.d == 2) {
    rep.identity_d = {"identity_d", 0.0, false};
  } else {
    const double factor = 1.0 - 0.5 * c.d;
    auto energy = [&c](const ProfileState& s) { return s.p * (c.c_v * s.theta + 0.5 * s.u * s.u); };
    const auto parts = dyadic(measure(energy));
    const auto mag = dyadic(measure([&](const ProfileState& s) { return std::abs(energy(s)); }));
    // + 0.0 keeps an exactly cancelled integral from printing as -0.
    rep.identity_d = {"identity_d", factor * (parts[0] + parts[1] + parts[2]) + 0.0, mag[2] > 0.0 && mag[2] >= mag[1]};
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Continuity oracle: P(r) = P(delta) exp(-int_delta^r (U' + (d-1)U/s) / (s/2 + U) ds)

struct ContinuityCheck {
  double max_rel_err = 0.0;
  double worst_radius = 0.0;
};

template <ProfileSource S>
ContinuityCheck continuity_oracle(const S& src, const PhysConsts& c, const DiagnosticsConfig& cfg,
                                  int checkpoints = 50, double atol = 1e-10) {
  if (src.termination().kind == Termination::SingularityEvent)
    throw std::invalid_argument("continuity_oracle: trajectory ended at the r/2 + U singularity");
  const auto bp = src.breakpoints();
  const double dm1 = static_cast<double>(c.d - 1);
  const double p0 = src.initial().p;
  auto rate = [dm1](const ProfileState& s) { return (s.v + dm1 * s.u / s.r) / (0.5 * s.r + s.u); };

  ContinuityCheck out{0.0, src.r_begin()};
  if (src.r_end() == src.r_begin()) return out;
  double exponent = 0.0;
  double prev = src.r_begin();
  for (double r : detail::uniform_radii(src.r_begin(), src.r_end(), checkpoints + 1)) {
    if (r == src.r_begin()) continue;
    exponent += detail::integrate_range(src, bp, prev, r, cfg.quad_rtol, rate);
    prev = r;
    const double p_oracle = p0 * std::exp(-exponent);
    const double err = std::abs(src.state_at(r).p - p_oracle) / std::max(std::abs(p_oracle), atol);
    if (err > out.max_rel_err) out = {err, r};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tail fits

struct TailFit {
  double p_inf = 0.0;      // mean of P
  double u_inf = 0.0;      // mean of r U
  double theta_inf = 0.0;  // mean of r^2 Theta
  double p_drift = 0.0;    // (max - min) / |mean| over the window
  double u_drift = 0.0;
  double theta_drift = 0.0;
  double r_lo = 0.0;
  double r_hi = 0.0;
};

namespace detail {

struct Spread {
  double mean;
  double drift;
};

inline Spread spread(std::span<const double> xs) {
  double sum = 0.0;
  double lo = xs.front();
  double hi = xs.front();
  for (double x : xs) {
    sum += x;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double mean = sum / static_cast<double>(xs.size());
  if (hi == lo) return {mean, 0.0};
  if (mean == 0.0) return {mean, std::numeric_limits<double>::infinity()};
  return {mean, (hi - lo) / std::abs(mean)};
}

}  // namespace detail

/// Fits over the last `tail_window` fraction of the range; nullopt (not applicable) unless the run reached r_max.
template <ProfileSource S>
std::optional<TailFit> tail_fit(const S& src, const DiagnosticsConfig& cfg, int samples = 101) {
  if (src.termination().kind != Termination::ReachedRMax) return std::nullopt;
  TailFit fit;
  fit.r_hi = src.r_end();
  fit.r_lo = src.r_end() - cfg.tail_window * (src.r_end() - src.r_begin());
  std::vector<double> ps, us, ts;
  for (double r : detail::uniform_radii(fit.r_lo, fit.r_hi, samples)) {
    const auto st = src.state_at(r);
    ps.push_back(st.p);
    us.push_back(r * st.u);
    ts.push_back(r * r * st.theta);
  }
  const auto sp = detail::spread(ps);
  const auto su = detail::spread(us);
  const auto st = detail::spread(ts);
  fit.p_inf = sp.mean;
  fit.p_drift = sp.drift;
  fit.u_inf = su.mean;
  fit.u_drift = su.drift;
  fit.theta_inf = st.mean;
  fit.theta_drift = st.drift;
  return fit;
}

// ---------------------------------------------------------------------------

struct DiagnosticsReport {
  WeightSamples weights;
  std::vector<std::pair<double, SmallnessReport>> smallness;  // one entry per gamma
  EnergyReport energy;
  std::optional<ContinuityCheck> continuity;  // absent for singular terminations
  std::optional<TailFit> tail;
};

/// Runs every diagnostic; smallness is evaluated on each gamma of `gammas` (each must exceed d).
template <ProfileSource S>
DiagnosticsReport diagnose(const S& src, const PhysConsts& c, const DiagnosticsConfig& cfg,
                           std::span<const double> gammas, int weight_samples = 11) {
  cfg.validate(c.d);
  DiagnosticsReport rep;
  rep.weights = weights(src, c, weight_samples, cfg.quad_rtol);
  const auto samples = detail::dense_samples(src);
  for (double g : gammas)
    rep.smallness.emplace_back(g, smallness_functional(std::span<const ProfileState>(samples), c, g));
  rep.energy = energy_report(src, c, cfg);
  if (src.termination().kind != Termination::SingularityEvent) rep.continuity = continuity_oracle(src, c, cfg);
  rep.tail = tail_fit(src, cfg);
  return rep;
}

}  // namespace shrinkers
