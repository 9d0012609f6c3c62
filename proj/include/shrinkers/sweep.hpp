#pragma once

// Parameter-grid shooting runs and their sign classification.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "shrinkers/errors.hpp"
#include "shrinkers/initdata.hpp"
#include "shrinkers/integrator.hpp"
#include "shrinkers/model.hpp"
#include "shrinkers/profile_trajectory.hpp"

namespace shrinkers {

enum class Regime { Cavitating, Smooth };

/// Sign of U at the classification radius. Cavitating blue and smooth red are NegativeSign.
enum class Classification { NegativeSign, PositiveSign, SolverError, Indeterminate };

inline std::string_view to_string(Regime r) noexcept { return r == Regime::Cavitating ? "cavitating" : "smooth"; }

inline std::string_view to_string(Classification c) noexcept {
  switch (c) {
    case Classification::NegativeSign: return "NegativeSign";
    case Classification::PositiveSign: return "PositiveSign";
    case Classification::SolverError: return "SolverError";
    case Classification::Indeterminate: return "Indeterminate";
  }
  return "Unknown";
}

inline constexpr double kDefaultDeadBand = 1e-8;

/// SolverError for error terminations; otherwise the sign of U at the event radius (blow-up) or r_max.
inline Classification classify(const ProfileTrajectory& traj, double dead_band = kDefaultDeadBand) {
  const auto& term = traj.termination();
  if (term.is_error()) return Classification::SolverError;
  const double u = traj.state_at(std::min(term.r, traj.r_end())).u;
  if (u > dead_band) return Classification::PositiveSign;
  if (u < -dead_band) return Classification::NegativeSign;
  return Classification::Indeterminate;
}

enum class Param { P0 = 0, Theta0 = 1, Alpha = 2 };

inline std::string_view to_string(Param p) noexcept {
  switch (p) {
    case Param::P0: return "p0";
    case Param::Theta0: return "theta0";
    case Param::Alpha: return "alpha";
  }
  return "?";
}

/// Linearly spaced parameter range.
struct Axis {
  Param param = Param::P0;
  double min = 0.0;
  double max = 0.0;
  int count = 1;
};

struct SweepSpec {
  Regime regime = Regime::Cavitating;
  std::vector<Axis> axes;
  // Values of parameters that are not swept. p0 is P_delta in the cavitating regime.
  double p0 = 1.0;
  double theta0 = 1.0;
  double alpha = 0.1;
  double delta = kDefaultCavitatingDelta;
  PhysConsts consts{};
  IntegratorConfig integrator{};
  double guard_eps = kDefaultGuardEps;
  VelocitySeed velocity = VelocitySeed::FixedVelocity;
  double dead_band = kDefaultDeadBand;
  /// Rerun non-majority cells at delta/10 and record whether their class survives.
  bool check_stability = true;

  void validate() const {
    consts.validate();
    integrator.validate();
    if (axes.size() > 3) throw ConfigError("SweepSpec: at most three axes");
    std::array<bool, 3> seen{};
    for (const auto& ax : axes) {
      auto& s = seen[static_cast<std::size_t>(ax.param)];
      if (s) throw ConfigError("SweepSpec: duplicate axis " + std::string(to_string(ax.param)));
      s = true;
      if (ax.count < 1) throw ConfigError("SweepSpec: axis count must be >= 1");
      if (!(ax.min <= ax.max)) throw ConfigError("SweepSpec: axis min must not exceed max");
      if (regime == Regime::Smooth && ax.param == Param::Alpha)
        throw ConfigError("SweepSpec: the smooth regime has no alpha parameter");
    }
    if (!(delta > 0.0)) throw ConfigError("SweepSpec: delta must be positive");
    if (!(dead_band > 0.0)) throw ConfigError("SweepSpec: dead_band must be positive");
    for (double x : values(Param::P0))
      if (!(x > 0.0)) throw ConfigError("SweepSpec: p0 values must be positive");
    if (regime == Regime::Smooth)
      for (double x : values(Param::Theta0))
        if (!(x > 0.0)) throw ConfigError("SweepSpec: smooth theta0 values must be positive");
  }

  const Axis* axis(Param p) const noexcept {
    for (const auto& ax : axes)
      if (ax.param == p) return &ax;
    return nullptr;
  }

  /// Grid values along p. Smooth-regime ranges starting at 0 drop the 0 endpoint: (0, max] in `count` steps.
  std::vector<double> values(Param p) const {
    const Axis* ax = axis(p);
    if (!ax) {
      const double fixed = p == Param::P0 ? p0 : p == Param::Theta0 ? theta0 : alpha;
      return {fixed};
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(ax->count));
    const bool open_at_zero = regime == Regime::Smooth && ax->min == 0.0 && ax->max > 0.0;
    for (int i = 0; i < ax->count; ++i) {
      if (open_at_zero)
        out.push_back(ax->max * (i + 1) / ax->count);
      else if (ax->count == 1)
        out.push_back(ax->min);
      else
        out.push_back(i + 1 == ax->count ? ax->max : ax->min + (ax->max - ax->min) * i / (ax->count - 1));
    }
    return out;
  }

  /// Grid extents along (p0, theta0, alpha).
  std::array<int, 3> shape() const {
    std::array<int, 3> n{1, 1, 1};
    for (const auto& ax : axes) n[static_cast<std::size_t>(ax.param)] = ax.count;
    return n;
  }

  std::size_t cell_count() const {
    const auto n = shape();
    return static_cast<std::size_t>(n[0]) * n[1] * n[2];
  }
};

struct CellResult {
  std::array<int, 3> index{};  // (i, j, k) along (p0, theta0, alpha)
  double p0 = 0.0;
  double theta0 = 0.0;
  double alpha = 0.0;
  Classification classification = Classification::SolverError;
  double r_end = 0.0;
  double u_end = 0.0;  // U at the classification radius
  std::size_t steps = 0;
  TerminationKind termination{};
  /// Set for non-majority cells when stability checking is on: class unchanged at delta/10.
  std::optional<bool> delta_stable;

  friend bool operator==(const CellResult&, const CellResult&) = default;
};

/// Launch state of one grid point.
inline ProfileState launch_state(const SweepSpec& spec, double p0, double theta0, double alpha, double delta) {
  if (spec.regime == Regime::Cavitating) return cavitating_state({delta, p0, alpha, theta0}, spec.velocity);
  return smooth_state({delta, p0, theta0}, spec.consts);
}

/// Row-major flat index -> (i, j, k).
inline std::array<int, 3> unflatten(const SweepSpec& spec, std::size_t flat) {
  const auto n = spec.shape();
  const auto k = static_cast<int>(flat % n[2]);
  const auto j = static_cast<int>((flat / n[2]) % n[1]);
  const auto i = static_cast<int>(flat / (static_cast<std::size_t>(n[2]) * n[1]));
  return {i, j, k};
}

namespace detail {

inline CellResult summarize(const std::array<int, 3>& idx, double p0, double theta0, double alpha,
                            const ProfileTrajectory& tr, double dead_band) {
  CellResult c;
  c.index = idx;
  c.p0 = p0;
  c.theta0 = theta0;
  c.alpha = alpha;
  c.classification = classify(tr, dead_band);
  c.r_end = tr.r_end();
  c.u_end = tr.final_state().u;
  c.steps = tr.step_count();
  c.termination = tr.termination();
  return c;
}

}  // namespace detail

/// Integrates the cell at `flat` with launch radius `delta`.
inline std::pair<CellResult, ProfileTrajectory> run_cell(const SweepSpec& spec, std::size_t flat, double delta) {
  const auto idx = unflatten(spec, flat);
  const double p0 = spec.values(Param::P0)[static_cast<std::size_t>(idx[0])];
  const double th = spec.values(Param::Theta0)[static_cast<std::size_t>(idx[1])];
  const double al = spec.values(Param::Alpha)[static_cast<std::size_t>(idx[2])];
  auto tr = integrate_profile(launch_state(spec, p0, th, al, delta), spec.consts, spec.integrator, spec.guard_eps);
  auto cell = detail::summarize(idx, p0, th, al, tr, spec.dead_band);
  return {std::move(cell), std::move(tr)};
}

/// Most frequent class; ties resolve to the lower enumerator.
inline Classification majority_class(const std::vector<CellResult>& cells) {
  std::array<std::size_t, 4> counts{};
  for (const auto& c : cells) ++counts[static_cast<std::size_t>(c.classification)];
  const auto it = std::max_element(counts.begin(), counts.end());
  return static_cast<Classification>(it - counts.begin());
}

/// Called from worker threads with (flat index, cell, trajectory) for every cell.
using CellObserver = std::function<void(std::size_t, const CellResult&, const ProfileTrajectory&)>;

namespace detail {

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, const Fn& fn) {
  threads = std::max(1u, threads);
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  const auto workers = std::min<std::size_t>(threads, n);
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
}

}  // namespace detail

/// One CellResult per grid cell in row-major (i, j, k) order, independent of thread count.
inline std::vector<CellResult> run_sweep(const SweepSpec& spec, unsigned threads = 1,
                                         const CellObserver& observer = {}) {
  spec.validate();
  const std::size_t n = spec.cell_count();
  std::vector<CellResult> cells(n);
  detail::parallel_for(n, threads, [&](std::size_t i) {
    auto [cell, tr] = run_cell(spec, i, spec.delta);
    if (observer) observer(i, cell, tr);
    cells[i] = std::move(cell);
  });

  if (spec.check_stability && n > 1) {
    const Classification major = majority_class(cells);
    std::vector<std::size_t> anomalous;
    for (std::size_t i = 0; i < n; ++i)
      if (cells[i].classification != major) anomalous.push_back(i);
    detail::parallel_for(anomalous.size(), threads, [&](std::size_t a) {
      const std::size_t i = anomalous[a];
      const auto rerun = run_cell(spec, i, spec.delta / 10.0);
      cells[i].delta_stable = rerun.first.classification == cells[i].classification;
    });
  }
  return cells;
}

}  // namespace shrinkers
