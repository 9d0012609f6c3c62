#include <gtest/gtest.h>

#include <charconv>
#include <cstring>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "oracle.hpp"
#include "shrinkers/io.hpp"

using namespace shrinkers;

namespace {

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

CellResult cell(int i, int j, int k, Classification c) {
  CellResult r;
  r.index = {i, j, k};
  r.classification = c;
  return r;
}

}  // namespace

TEST(FormatNumber, FrozenExamples) {
  EXPECT_EQ(io::format_number(0.1), "0.1");
  EXPECT_EQ(io::format_number(1.0), "1");
  EXPECT_EQ(io::format_number(-2.5), "-2.5");
  EXPECT_EQ(io::format_number(1e-7), "1e-07");
  EXPECT_EQ(io::format_number(1e6), "1e+06");
  EXPECT_EQ(io::format_number(123456.0), "123456");
  EXPECT_EQ(io::format_number(0.0), "0");
  EXPECT_EQ(io::format_number(-0.0), "-0");
  EXPECT_EQ(io::format_number(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(io::format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(io::format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(io::format_number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(FormatNumber, RoundTripsRandomDoubles) {
  oracle::Rng g(2718);
  for (int i = 0; i < 20000; ++i) {
    unsigned long long bits = g.next();
    double x;
    std::memcpy(&x, &bits, sizeof x);
    if (!std::isfinite(x)) continue;
    const std::string s = io::format_number(x);
    double back = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), back);
    ASSERT_EQ(res.ec, std::errc{}) << s;
    ASSERT_EQ(std::memcmp(&back, &x, sizeof x), 0) << s;
  }
}

TEST(TrajectoryCsv, StationaryColumnsAreConstant) {
  const auto tr = integrate_profile({1e-3, 1.0, 0.0, 0.0, 0.0, 0.0}, paper_constants(), IntegratorConfig{});
  std::ostringstream os;
  io::write_trajectory_csv(os, tr, 5);
  const auto ls = lines(os.str());
  ASSERT_EQ(ls.size(), 6u);
  EXPECT_EQ(ls[0], "r,P,U,V,Theta,S,log10P");
  EXPECT_EQ(ls[1], "0.001,1,0,0,0,0,0");
  EXPECT_EQ(ls[5], "50,1,0,0,0,0,0");
  for (std::size_t i = 1; i < ls.size(); ++i) EXPECT_NE(ls[i].find(",1,0,0,0,0,0"), std::string::npos) << ls[i];
}

TEST(TrajectoryCsv, NonPositiveDensityLeavesLogEmpty) {
  const auto tr = integrate_profile({1e-3, -2.0, 0.0, 0.0, 0.0, 0.0}, paper_constants(), IntegratorConfig{});
  std::ostringstream os;
  io::write_trajectory_csv(os, tr, 2);
  const auto ls = lines(os.str());
  ASSERT_EQ(ls.size(), 3u);
  EXPECT_EQ(ls[1], "0.001,-2,0,0,0,0,");
}

TEST(SweepCsv, HeaderAndRows) {
  std::vector<CellResult> cells{cell(0, 0, 0, Classification::NegativeSign)};
  cells[0].p0 = 0.5;
  cells[0].theta0 = 1.0;
  cells[0].alpha = 0.1;
  cells[0].r_end = 8.0;
  cells[0].u_end = -534.5;
  cells[0].steps = 137;
  cells[0].termination = {Termination::BlowupEvent, 8.0};
  std::ostringstream os;
  io::write_sweep_csv(os, cells);
  EXPECT_EQ(os.str(),
            "i,j,k,p0,theta0,alpha,class,r_end,u_end,steps,termination\n"
            "0,0,0,0.5,1,0.1,NegativeSign,8,-534.5,137,BlowupEvent\n");
}

TEST(AnomaliesCsv, OnlyFlaggedCells) {
  std::vector<CellResult> cells{cell(0, 0, 0, Classification::PositiveSign), cell(1, 0, 0, Classification::SolverError)};
  cells[1].delta_stable = false;
  std::ostringstream os;
  io::write_anomalies_csv(os, cells);
  EXPECT_EQ(os.str(), "i,j,k,class,delta_stable\n1,0,0,SolverError,false\n");
}

TEST(Ppm, SingleWhitePixel) {
  std::ostringstream os;
  io::write_phase_ppm(os, {1, 1, 1}, {cell(0, 0, 0, Classification::Indeterminate)});
  EXPECT_EQ(os.str(), "P3\n1 1\n255\n255 255 255\n");
}

TEST(Ppm, ColorTable) {
  EXPECT_EQ(io::color_of(Classification::NegativeSign).b, 255);
  EXPECT_EQ(io::color_of(Classification::PositiveSign).r, 255);
  EXPECT_EQ(io::color_of(Classification::SolverError).g, 255);
  const auto w = io::color_of(Classification::Indeterminate);
  EXPECT_EQ(w.r + w.g + w.b, 765);
}

// 2 x 2 x 2 grid: columns (i, tiled by k), top row is the largest j.
TEST(Ppm, LayoutGolden) {
  std::vector<CellResult> cells;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        Classification c = Classification::NegativeSign;
        if (j == 0 && i == 1) c = Classification::PositiveSign;
        if (k == 1 && j == 1 && i == 0) c = Classification::SolverError;
        cells.push_back(cell(i, j, k, c));
      }
  std::ostringstream os;
  io::write_phase_ppm(os, {2, 2, 2}, cells);
  EXPECT_EQ(os.str(),
            "P3\n4 2\n255\n"
            "0 0 255\n0 0 255\n0 255 0\n0 0 255\n"
            "0 0 255\n255 0 0\n0 0 255\n255 0 0\n");
}
