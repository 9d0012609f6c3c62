#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature with global interval bisection.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>
#include <sstream>

#include "shrinkers/errors.hpp"

namespace shrinkers::quad {

namespace detail {

inline constexpr std::array<double, 8> xgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for xgk[1], xgk[3], xgk[5], xgk[7].
inline constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Rule {
  double kronrod;
  double gauss;
  double kronrod_abs;  // Kronrod estimate of the integral of |f|
};

template <class F>
Rule gk15(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double k = wgk[7] * fc;
  double g = wg[3] * fc;
  double ka = wgk[7] * std::abs(fc);
  for (int j = 0; j < 7; ++j) {
    const double dx = h * xgk[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    const double fs = f1 + f2;
    k += wgk[j] * fs;
    ka += wgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) g += wg[j / 2] * fs;
  }
  if (!std::isfinite(k)) {
    std::ostringstream os;
    os.precision(17);
    os << "non-finite integrand on [" << a << ", " << b << "]";
    throw QuadratureFailure(os.str());
  }
  return {k * h, g * h, ka * std::abs(h)};
}

}  // namespace detail

inline constexpr int kMaxIntervals = 4000;

/// Globally adaptive integral of f over [a, b]: the interval with the largest
/// error estimate is bisected until the summed estimate is within
/// max(atol, rtol * |I|). Throws QuadratureFailure.
template <class F>
double integrate(const F& f, double a, double b, double rtol, double atol = 0.0) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, rtol, atol);

  struct Piece {
    double lo, hi, value, err, noise;
    bool operator<(const Piece& o) const { return err < o.err; }
  };
  auto make = [&](double lo, double hi) {
    const auto rule = detail::gk15(f, lo, hi);
    return Piece{lo, hi, rule.kronrod, std::abs(rule.kronrod - rule.gauss),
                 50.0 * std::numeric_limits<double>::epsilon() * rule.kronrod_abs};
  };

  std::vector<Piece> heap{make(a, b)};
  double value = heap.front().value;
  double err = heap.front().err;
  double noise = heap.front().noise;
  while (err > std::max({atol, rtol * std::abs(value), noise})) {
    if (static_cast<int>(heap.size()) >= kMaxIntervals) {
      std::ostringstream os;
      os.precision(17);
      os << "adaptive quadrature did not converge on [" << a << ", " << b << "], error estimate " << err;
      throw QuadratureFailure(os.str());
    }
    std::pop_heap(heap.begin(), heap.end());
    const Piece worst = heap.back();
    heap.pop_back();
    const double m = 0.5 * (worst.lo + worst.hi);
    if (!(m > worst.lo && m < worst.hi)) {
      std::ostringstream os;
      os.precision(17);
      os << "adaptive quadrature cannot split [" << worst.lo << ", " << worst.hi << "], error estimate " << err;
      throw QuadratureFailure(os.str());
    }
    const Piece left = make(worst.lo, m);
    const Piece right = make(m, worst.hi);
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end());
    // Re-sum instead of updating incrementally so the result is independent of rounding drift.
    value = err = noise = 0.0;
    for (const auto& pc : heap) {
      value += pc.value;
      err += pc.err;
      noise += pc.noise;
    }
  }
  return value;
}

/// Sum of integrals over consecutive panels [x_i, x_{i+1}].
template <class F>
double integrate_panels(const F& f, std::span<const double> knots, double rtol, double atol = 0.0) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) sum += integrate(f, knots[i], knots[i + 1], rtol, atol);
  return sum;
}

}  // namespace shrinkers::quad
