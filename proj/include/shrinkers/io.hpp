#pragma once

// Output formats: CSV tables with shortest round-trip numbers, P3 pixmaps.

#include <array>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include "shrinkers/profile_trajectory.hpp"
#include "shrinkers/sweep.hpp"

namespace shrinkers::io {

/// Shortest decimal that parses back to the same double (std::to_chars, general form).
/// Non-finite values print as "nan", "inf", "-inf".
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (res.ec != std::errc{}) return "nan";
  return std::string(buf.data(), res.ptr);
}

inline constexpr std::string_view kTrajectoryHeader = "r,P,U,V,Theta,S,log10P";
inline constexpr std::string_view kSweepHeader = "i,j,k,p0,theta0,alpha,class,r_end,u_end,steps,termination";

/// Samples the trajectory at n uniform radii on [r_begin, r_end]; log10P is empty when P <= 0.
inline void write_trajectory_csv(std::ostream& os, const ProfileTrajectory& tr, int n) {
  os << kTrajectoryHeader << '\n';
  const double lo = tr.r_begin();
  const double hi = tr.r_end();
  const int rows = hi > lo ? std::max(n, 2) : 1;
  for (int i = 0; i < rows; ++i) {
    const double r = (rows == 1 || i + 1 == rows) ? hi : lo + (hi - lo) * i / (rows - 1);
    const auto st = tr.state_at(r);
    os << format_number(st.r) << ',' << format_number(st.p) << ',' << format_number(st.u) << ','
       << format_number(st.v) << ',' << format_number(st.theta) << ',' << format_number(st.s) << ',';
    if (st.p > 0.0) os << format_number(std::log10(st.p));
    os << '\n';
  }
}

inline void write_sweep_csv(std::ostream& os, const std::vector<CellResult>& cells) {
  os << kSweepHeader << '\n';
  for (const auto& c : cells) {
    os << c.index[0] << ',' << c.index[1] << ',' << c.index[2] << ',' << format_number(c.p0) << ','
       << format_number(c.theta0) << ',' << format_number(c.alpha) << ',' << to_string(c.classification) << ','
       << format_number(c.r_end) << ',' << format_number(c.u_end) << ',' << c.steps << ','
       << to_string(c.termination.kind) << '\n';
  }
}

/// Non-majority cells and their delta/10 stability flag.
inline void write_anomalies_csv(std::ostream& os, const std::vector<CellResult>& cells) {
  os << "i,j,k,class,delta_stable\n";
  for (const auto& c : cells) {
    if (!c.delta_stable) continue;
    os << c.index[0] << ',' << c.index[1] << ',' << c.index[2] << ',' << to_string(c.classification) << ','
       << (*c.delta_stable ? "true" : "false") << '\n';
  }
}

struct Rgb {
  int r, g, b;
};

inline constexpr Rgb color_of(Classification c) noexcept {
  switch (c) {
    case Classification::NegativeSign: return {0, 0, 255};
    case Classification::PositiveSign: return {255, 0, 0};
    case Classification::SolverError: return {0, 255, 0};
    case Classification::Indeterminate: return {255, 255, 255};
  }
  return {0, 0, 0};
}

/// ASCII P3 phase map, one pixel per cell, one pixel per line.
///
/// Columns run along p0 (index i); alpha slices (index k) are tiled left to
/// right. Rows run along theta0 (index j) with the smallest value in the
/// bottom row, so rows are written from j = nj-1 down to j = 0.
inline void write_phase_ppm(std::ostream& os, const std::array<int, 3>& shape,
                            const std::vector<CellResult>& cells) {
  const int ni = shape[0], nj = shape[1], nk = shape[2];
  os << "P3\n" << ni * nk << ' ' << nj << "\n255\n";
  for (int j = nj - 1; j >= 0; --j)
    for (int k = 0; k < nk; ++k)
      for (int i = 0; i < ni; ++i) {
        const auto flat = (static_cast<std::size_t>(i) * nj + j) * nk + k;
        const auto [r, g, b] = color_of(cells.at(flat).classification);
        os << r << ' ' << g << ' ' << b << '\n';
      }
}

}  // namespace shrinkers::io
