#pragma once

// Adaptive Dormand-Prince 5(4) integrator with the standard 4th-order
// continuous extension, PI step-size control and terminal events for
// blow-up and singularity approach. Generic over the state dimension so
// manufactured problems can exercise it independently of the profile model.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "shrinkers/errors.hpp"

namespace shrinkers {

struct IntegratorConfig {
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_init = 1e-6;
  double h_min = 1e-14;
  double h_max = 1.0;
  double r_max = 50.0;
  /// Event fires when max_i |y_i| >= blowup_threshold.
  double blowup_threshold = 1e6;
  std::int64_t max_steps = 1'000'000;

  void validate() const {
    auto bad = [](const std::string& msg) { throw ConfigError("IntegratorConfig: " + msg); };
    if (!(rtol > 0.0) || !(atol > 0.0)) bad("rtol and atol must be positive");
    if (!(h_min > 0.0) || !(h_min <= h_init) || !(h_init <= h_max) || !std::isfinite(h_max))
      bad("step bounds must satisfy 0 < h_min <= h_init <= h_max");
    if (!(r_max > 0.0) || !std::isfinite(r_max)) bad("r_max must be positive and finite");
    if (!(blowup_threshold > 0.0)) bad("blowup_threshold must be positive");
    if (max_steps < 1) bad("max_steps must be >= 1");
  }
};

enum class Termination {
  ReachedRMax,
  BlowupEvent,
  SingularityEvent,
  StepSizeUnderflow,
  StepBudgetExhausted,
  NonFinite,
};

inline std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::ReachedRMax: return "ReachedRMax";
    case Termination::BlowupEvent: return "BlowupEvent";
    case Termination::SingularityEvent: return "SingularityEvent";
    case Termination::StepSizeUnderflow: return "StepSizeUnderflow";
    case Termination::StepBudgetExhausted: return "StepBudgetExhausted";
    case Termination::NonFinite: return "NonFinite";
  }
  return "Unknown";
}

/// How an integration ended and at which radius (event radius, failure radius or r_max).
struct TerminationKind {
  Termination kind = Termination::ReachedRMax;
  double r = 0.0;

  bool is_error() const noexcept {
    return kind == Termination::StepSizeUnderflow || kind == Termination::StepBudgetExhausted ||
           kind == Termination::NonFinite || kind == Termination::SingularityEvent;
  }
  friend bool operator==(const TerminationKind&, const TerminationKind&) = default;
};

/// One accepted step with its continuous extension.
template <std::size_t N>
struct Step {
  using Vector = std::array<double, N>;

  double r_left = 0.0;
  double r_right = 0.0;
  Vector y_left{};
  Vector y_right{};
  std::array<Vector, 5> dense{};

  double width() const noexcept { return r_right - r_left; }

  Vector eval(double r) const noexcept {
    if (r == r_left) return y_left;
    if (r == r_right) return y_right;
    const double t = (r - r_left) / width();
    const double t1 = 1.0 - t;
    Vector out;
    for (std::size_t i = 0; i < N; ++i)
      out[i] = dense[0][i] + t * (dense[1][i] + t1 * (dense[2][i] + t * (dense[3][i] + t1 * dense[4][i])));
    return out;
  }

  /// d/dr of the interpolant.
  Vector derivative(double r) const noexcept {
    const double h = width();
    const double t = (r - r_left) / h;
    const double t1 = 1.0 - t;
    const double w2 = 1.0 - 2.0 * t;
    const double w3 = t * (2.0 - 3.0 * t);
    const double w4 = 2.0 * t * t1 * (t1 - t);
    Vector out;
    for (std::size_t i = 0; i < N; ++i)
      out[i] = (dense[1][i] + w2 * dense[2][i] + w3 * dense[3][i] + w4 * dense[4][i]) / h;
    return out;
  }
};

/// Dense-output record of an integration. Immutable once built.
template <std::size_t N>
class Trajectory {
public:
  using Vector = std::array<double, N>;

  Trajectory() = default;
  Trajectory(double r0, const Vector& y0, std::vector<Step<N>> steps, double r_end, const Vector& y_end,
             TerminationKind term)
      : r0_(r0), y0_(y0), steps_(std::move(steps)), r_end_(r_end), y_end_(y_end), term_(term) {}

  double r_begin() const noexcept { return r0_; }
  double r_end() const noexcept { return r_end_; }
  const Vector& initial() const noexcept { return y0_; }
  const Vector& final_state() const noexcept { return y_end_; }
  const std::vector<Step<N>>& steps() const noexcept { return steps_; }
  std::size_t step_count() const noexcept { return steps_.size(); }
  const TerminationKind& termination() const noexcept { return term_; }

  /// Interpolated state; exact at stored step endpoints. Throws OutOfRangeError outside [r_begin, r_end].
  Vector eval(double r) const {
    if (r == r_end_) return y_end_;
    return locate(r).eval(r);
  }

  Vector derivative(double r) const { return locate(r).derivative(r); }

  friend bool operator==(const Trajectory& a, const Trajectory& b) noexcept {
    if (a.r0_ != b.r0_ || a.y0_ != b.y0_ || a.r_end_ != b.r_end_ || a.y_end_ != b.y_end_ || !(a.term_ == b.term_) ||
        a.steps_.size() != b.steps_.size())
      return false;
    for (std::size_t i = 0; i < a.steps_.size(); ++i) {
      const auto& x = a.steps_[i];
      const auto& y = b.steps_[i];
      if (x.r_left != y.r_left || x.r_right != y.r_right || x.y_left != y.y_left || x.y_right != y.y_right ||
          x.dense != y.dense)
        return false;
    }
    return true;
  }

private:
  const Step<N>& locate(double r) const {
    if (!(r >= r0_ && r <= r_end_)) {
      std::ostringstream os;
      os.precision(17);
      os << "radius " << r << " outside trajectory range [" << r0_ << ", " << r_end_ << "]";
      throw OutOfRangeError(os.str());
    }
    if (steps_.empty()) throw OutOfRangeError("trajectory has no steps");
    auto it = std::lower_bound(steps_.begin(), steps_.end(), r,
                               [](const Step<N>& s, double x) { return s.r_right < x; });
    if (it == steps_.end()) --it;
    return *it;
  }

  double r0_ = 0.0;
  Vector y0_{};
  std::vector<Step<N>> steps_;
  double r_end_ = 0.0;
  Vector y_end_{};
  TerminationKind term_{};
};

/// Guard that never fires.
struct NoGuard {
  template <class V>
  constexpr double operator()(double, const V&) const noexcept {
    return 1.0;
  }
};

namespace dopri {

// Dormand-Prince 5(4) tableau.
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                        a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                        a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                        e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

template <std::size_t N>
struct Attempt {
  std::array<double, N> y_new;
  std::array<double, N> k7;  // f(r + h, y_new), reused as next k1
  std::array<double, N> err;
  std::array<std::array<double, N>, 5> dense;
};

/// One Dormand-Prince step from (r, y) with slope k1. Propagates exceptions from f.
template <std::size_t N, class F>
Attempt<N> attempt(const F& f, double r, const std::array<double, N>& y, const std::array<double, N>& k1,
                   double h) {
  using V = std::array<double, N>;
  V tmp;
  auto combine = [&](auto&& coef) {
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * coef(i);
    return tmp;
  };
  const V k2 = f(r + c2 * h, combine([&](std::size_t i) { return a21 * k1[i]; }));
  const V k3 = f(r + c3 * h, combine([&](std::size_t i) { return a31 * k1[i] + a32 * k2[i]; }));
  const V k4 = f(r + c4 * h, combine([&](std::size_t i) { return a41 * k1[i] + a42 * k2[i] + a43 * k3[i]; }));
  const V k5 = f(r + c5 * h, combine([&](std::size_t i) {
                   return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i];
                 }));
  const V k6 = f(r + h, combine([&](std::size_t i) {
                   return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i];
                 }));
  Attempt<N> out;
  for (std::size_t i = 0; i < N; ++i)
    out.y_new[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
  out.k7 = f(r + h, out.y_new);
  for (std::size_t i = 0; i < N; ++i) {
    out.err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * out.k7[i]);
    const double ydiff = out.y_new[i] - y[i];
    const double bspl = h * k1[i] - ydiff;
    out.dense[0][i] = y[i];
    out.dense[1][i] = ydiff;
    out.dense[2][i] = bspl;
    out.dense[3][i] = ydiff - h * out.k7[i] - bspl;
    out.dense[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * out.k7[i]);
  }
  return out;
}

template <std::size_t N>
double max_abs(const std::array<double, N>& y) noexcept {
  double m = 0.0;
  for (double x : y) m = std::max(m, std::abs(x));
  return m;
}

template <std::size_t N>
bool all_finite(const std::array<double, N>& y) noexcept {
  return std::all_of(y.begin(), y.end(), [](double x) { return std::isfinite(x); });
}

/// Bisects [lo, hi] until hi - lo <= rel * |hi|; pred(lo) is false and pred(hi) is true. Returns hi.
template <class Pred>
double bisect(double lo, double hi, const Pred& pred, double rel = 1e-10) {
  for (int it = 0; it < 200 && hi - lo > rel * std::abs(hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (pred(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace dopri

/// PI step-size controller: safety 0.9, step-ratio clamp [0.2, 5].
struct PiController {
  static constexpr double safety = 0.9;
  static constexpr double min_factor = 0.2;
  static constexpr double max_factor = 5.0;
  static constexpr double alpha = 0.17;  // 0.2 - 0.75 * beta
  static constexpr double beta = 0.04;

  double err_prev = 1e-4;

  double accepted(double err) {
    err = std::max(err, 1e-10);
    double f = safety * std::pow(err, -alpha) * std::pow(err_prev, beta);
    err_prev = std::max(err, 1e-4);
    return std::clamp(f, min_factor, max_factor);
  }
  static double rejected(double err) { return std::clamp(safety * std::pow(err, -alpha), min_factor, 1.0); }
};

/// Integrates y' = f(r, y) from (r0, y0) towards cfg.r_max.
///
/// guard(r, y) is a signed function whose zero marks a singularity of f; a
/// sign change across an accepted step ends the run with SingularityEvent at
/// the bisected root. f may throw SingularityError / NonFiniteError; such
/// stages reject the step. All failure modes end up in the TerminationKind.
template <std::size_t N, class F, class Guard = NoGuard>
Trajectory<N> integrate(const F& f, double r0, const std::array<double, N>& y0, const IntegratorConfig& cfg,
                        const Guard& guard = Guard{}) {
  using V = std::array<double, N>;
  cfg.validate();
  std::vector<Step<N>> steps;
  auto finish = [&](double r_end, const V& y_end, Termination kind, double r_evt) {
    return Trajectory<N>(r0, y0, std::move(steps), r_end, y_end, TerminationKind{kind, r_evt});
  };

  if (!dopri::all_finite(y0) || !std::isfinite(r0)) return finish(r0, y0, Termination::NonFinite, r0);
  if (dopri::max_abs(y0) >= cfg.blowup_threshold) return finish(r0, y0, Termination::BlowupEvent, r0);
  if (r0 >= cfg.r_max) return finish(r0, y0, Termination::ReachedRMax, r0);
  const double g0 = guard(r0, y0);
  if (g0 == 0.0) return finish(r0, y0, Termination::SingularityEvent, r0);

  V k1;
  try {
    k1 = f(r0, y0);
  } catch (const SingularityError&) {
    return finish(r0, y0, Termination::SingularityEvent, r0);
  } catch (const NonFiniteError&) {
    return finish(r0, y0, Termination::NonFinite, r0);
  }

  double r = r0;
  V y = y0;
  double g_prev = g0;
  double h = std::min({cfg.h_init, cfg.h_max, cfg.r_max - r0});
  PiController ctl;
  bool last_rejected = false;
  Termination reject_cause = Termination::StepSizeUnderflow;

  while (true) {
    if (static_cast<std::int64_t>(steps.size()) >= cfg.max_steps)
      return finish(r, y, Termination::StepBudgetExhausted, r);
    if (h < cfg.h_min || r + h == r) return finish(r, y, reject_cause, r);

    bool hits_end = false;
    if (r + h >= cfg.r_max) {
      h = cfg.r_max - r;
      hits_end = true;
    }

    dopri::Attempt<N> at;
    double err = 0.0;
    try {
      at = dopri::attempt<N>(f, r, y, k1, h);
      if (!dopri::all_finite(at.y_new) || !dopri::all_finite(at.err)) throw NonFiniteError("non-finite step");
      for (std::size_t i = 0; i < N; ++i) {
        const double sc = cfg.atol + cfg.rtol * std::max(std::abs(y[i]), std::abs(at.y_new[i]));
        err = std::max(err, std::abs(at.err[i]) / sc);
      }
    } catch (const SingularityError&) {
      reject_cause = Termination::SingularityEvent;
      h *= PiController::min_factor;
      last_rejected = true;
      continue;
    } catch (const NonFiniteError&) {
      reject_cause = Termination::NonFinite;
      h *= PiController::min_factor;
      last_rejected = true;
      continue;
    }

    if (!(err <= 1.0)) {
      reject_cause = Termination::StepSizeUnderflow;
      h *= PiController::rejected(err);
      last_rejected = true;
      continue;
    }

    const double r_new = hits_end ? cfg.r_max : r + h;
    Step<N> st{r, r_new, y, at.y_new, at.dense};
    steps.push_back(st);

    // Terminal events on the accepted step; the earlier one wins.
    double r_evt = std::numeric_limits<double>::infinity();
    Termination evt = Termination::ReachedRMax;
    const double g_new = guard(r_new, at.y_new);
    if (g_new == 0.0 || std::signbit(g_new) != std::signbit(g_prev)) {
      const bool neg0 = std::signbit(g_prev);
      r_evt = dopri::bisect(r, r_new, [&](double x) {
        const double g = guard(x, st.eval(x));
        return g == 0.0 || std::signbit(g) != neg0;
      });
      evt = Termination::SingularityEvent;
    }
    if (dopri::max_abs(at.y_new) >= cfg.blowup_threshold) {
      const double rb = dopri::bisect(
          r, r_new, [&](double x) { return dopri::max_abs(st.eval(x)) >= cfg.blowup_threshold; });
      if (rb < r_evt) {
        r_evt = rb;
        evt = Termination::BlowupEvent;
      }
    }
    if (evt != Termination::ReachedRMax) return finish(r_evt, st.eval(r_evt), evt, r_evt);
    if (hits_end) return finish(r_new, at.y_new, Termination::ReachedRMax, r_new);

    double factor = ctl.accepted(err);
    if (last_rejected) factor = std::min(factor, 1.0);
    last_rejected = false;
    reject_cause = Termination::StepSizeUnderflow;
    r = r_new;
    y = at.y_new;
    k1 = at.k7;
    g_prev = g_new;
    h = std::min(h * factor, cfg.h_max);
  }
}

/// Fixed-step Dormand-Prince (5th-order solution), used for order verification only.
template <std::size_t N, class F>
std::array<double, N> integrate_fixed(const F& f, double r0, const std::array<double, N>& y0, double r1,
                                      double h) {
  if (!(h > 0.0) || !(r1 > r0)) throw std::invalid_argument("integrate_fixed: need h > 0 and r1 > r0");
  const auto n = static_cast<std::int64_t>(std::llround((r1 - r0) / h));
  if (n < 1) throw std::invalid_argument("integrate_fixed: interval shorter than one step");
  const double step = (r1 - r0) / static_cast<double>(n);
  std::array<double, N> y = y0;
  std::array<double, N> k1 = f(r0, y);
  for (std::int64_t i = 0; i < n; ++i) {
    const double r = r0 + static_cast<double>(i) * step;
    const auto at = dopri::attempt<N>(f, r, y, k1, step);
    y = at.y_new;
    k1 = at.k7;
  }
  return y;
}

}  // namespace shrinkers
