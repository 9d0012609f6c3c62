#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "oracle.hpp"
#include "shrinkers/errors.hpp"
#include "shrinkers/integrator.hpp"
#include "shrinkers/model.hpp"
#include "shrinkers/profile_trajectory.hpp"

using namespace shrinkers;

namespace {

using V1 = std::array<double, 1>;

auto linear(double lam) {
  return [lam](double, const V1& y) { return V1{lam * y[0]}; };
}

double fitted_order(const std::vector<double>& hs, const std::vector<double>& errs) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double x = std::log(hs[i]), y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST(Config, Defaults) {
  const IntegratorConfig c;
  EXPECT_EQ(c.rtol, 1e-8);
  EXPECT_EQ(c.atol, 1e-10);
  EXPECT_EQ(c.r_max, 50.0);
  EXPECT_EQ(c.blowup_threshold, 1e6);
  EXPECT_EQ(c.max_steps, 1'000'000);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, RejectsInvalid) {
  IntegratorConfig c;
  c.h_min = 1.0;
  c.h_init = 0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = IntegratorConfig{};
  c.rtol = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = IntegratorConfig{};
  c.r_max = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Integrate, StationaryProfileReachesRMax) {
  const ProfileState init{1e-3, 1.0, 0.0, 0.0, 0.0, 0.0};
  const auto tr = integrate_profile(init, paper_constants(), IntegratorConfig{});
  EXPECT_EQ(tr.termination().kind, Termination::ReachedRMax);
  EXPECT_EQ(tr.r_end(), 50.0);
  const auto f = tr.final_state();
  EXPECT_NEAR(f.p, 1.0, 1e-12);
  EXPECT_NEAR(f.u, 0.0, 1e-12);
  EXPECT_NEAR(f.v, 0.0, 1e-12);
  EXPECT_NEAR(f.theta, 0.0, 1e-12);
  EXPECT_NEAR(f.s, 0.0, 1e-12);
  oracle::Rng g(1);
  for (int i = 0; i < 50; ++i) {
    const auto st = dense_eval(tr, g.uniform(1e-3, 50.0));
    EXPECT_EQ(st.p, 1.0);
    EXPECT_EQ(st.u, 0.0);
  }
}

TEST(Integrate, DecayingExponentialFinalValue) {
  IntegratorConfig cfg;
  const double delta = 1e-3;
  const auto tr = integrate<1>(linear(-1.0), delta, V1{1.0}, cfg);
  EXPECT_EQ(tr.termination().kind, Termination::ReachedRMax);
  EXPECT_NEAR(tr.final_state()[0], std::exp(-(cfg.r_max - delta)), 10 * cfg.rtol);
}

TEST(Integrate, DecayingExponentialRelativeAccuracy) {
  IntegratorConfig cfg;
  cfg.r_max = 5.0;
  cfg.atol = 1e-20;
  const auto tr = integrate<1>(linear(-1.0), 0.0 + 1e-3, V1{1.0}, cfg);
  const double exact = std::exp(-(5.0 - 1e-3));
  EXPECT_LE(std::abs(tr.final_state()[0] - exact) / exact, 10 * cfg.rtol);
}

TEST(Integrate, BlowupEventLocation) {
  IntegratorConfig cfg;
  cfg.blowup_threshold = std::exp(0.9);
  const auto tr = integrate<1>(linear(1.0), 0.1, V1{1.0}, cfg);
  EXPECT_EQ(tr.termination().kind, Termination::BlowupEvent);
  EXPECT_NEAR(tr.termination().r, 1.0, 1e-8);
  EXPECT_EQ(tr.r_end(), tr.termination().r);
  // Event bracketing: state norm at the event within 1e-6 of the threshold.
  EXPECT_NEAR(tr.final_state()[0] / cfg.blowup_threshold, 1.0, 1e-6);
}

TEST(Integrate, BlowupBracketingOnProfiles) {
  IntegratorConfig cfg;
  const ProfileState init{1e-3, 0.5, -0.1, -0.1, 1.0, 0.0};
  const auto tr = integrate_profile(init, paper_constants(), cfg);
  ASSERT_EQ(tr.termination().kind, Termination::BlowupEvent);
  const auto y = tr.final_state().vec();
  double m = 0.0;
  for (double x : y) m = std::max(m, std::abs(x));
  EXPECT_NEAR(m / cfg.blowup_threshold, 1.0, 1e-6);
}

TEST(DenseEval, ExponentialInterpolant) {
  IntegratorConfig cfg;
  cfg.r_max = 10.0;
  const auto tr = integrate<1>(linear(-1.0), 0.0 + 1e-3, V1{1.0}, cfg);
  oracle::Rng g(77);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double r = g.uniform(1e-3, 10.0);
    worst = std::max(worst, std::abs(tr.eval(r)[0] - std::exp(-(r - 1e-3))));
  }
  EXPECT_LE(worst, 100 * cfg.rtol);
}

TEST(DenseEval, EndpointsExactAndRangeChecked) {
  const auto tr = integrate<1>(linear(-1.0), 0.5, V1{1.0}, IntegratorConfig{});
  for (const auto& st : tr.steps()) {
    EXPECT_EQ(tr.eval(st.r_left), st.y_left);
    if (st.r_right <= tr.r_end()) {
      EXPECT_EQ(tr.eval(st.r_right), st.y_right);
    }
  }
  EXPECT_EQ(tr.eval(0.5), V1{1.0});
  EXPECT_THROW(tr.eval(0.4), OutOfRangeError);
  EXPECT_THROW(tr.eval(50.5), OutOfRangeError);
  EXPECT_THROW(tr.eval(std::numeric_limits<double>::quiet_NaN()), OutOfRangeError);
}

TEST(Trajectory, StepChainInvariants) {
  const ProfileState init{1e-3, 0.5, -1e-4, -0.1, 1.0, 0.0};
  const auto tr = integrate_profile(init, paper_constants(), IntegratorConfig{});
  const auto& steps = tr.raw().steps();
  ASSERT_FALSE(steps.empty());
  EXPECT_EQ(steps.front().r_left, init.r);
  EXPECT_EQ(steps.front().y_left, init.vec());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    EXPECT_LT(steps[i].r_left, steps[i].r_right);
    if (i + 1 < steps.size()) {
      EXPECT_EQ(steps[i].r_right, steps[i + 1].r_left);
      EXPECT_EQ(steps[i].y_right, steps[i + 1].y_left);
    }
  }
}

TEST(Integrate, FixedStepOrderIsFive) {
  const std::vector<double> hs{1e-2, 5e-3, 2.5e-3, 1.25e-3};
  for (double lam : {-10.0, 10.0}) {
    std::vector<double> errs;
    for (double h : hs) {
      const double y = integrate_fixed<1>(linear(lam), 0.0, V1{1.0}, 1.0, h)[0];
      errs.push_back(std::abs(y - std::exp(lam)) / std::exp(lam));
    }
    EXPECT_NEAR(fitted_order(hs, errs), 5.0, 0.2) << "lambda " << lam;
  }
}

TEST(Integrate, ToleranceMonotonicity) {
  struct Problem {
    double lam;
    double r1;
  };
  for (const Problem pb : {Problem{-1.0, 5.0}, Problem{1.0, 3.0}, Problem{-3.0, 2.0}, Problem{0.5, 10.0}}) {
    double prev = std::numeric_limits<double>::infinity();
    IntegratorConfig cfg;
    cfg.r_max = pb.r1;
    cfg.rtol = 1e-4;
    cfg.atol = 1e-6;
    cfg.blowup_threshold = 1e300;
    for (int k = 0; k < 10; ++k) {
      const auto tr = integrate<1>(linear(pb.lam), 0.0 + 1e-3, V1{1.0}, cfg);
      const double err = std::abs(tr.final_state()[0] - std::exp(pb.lam * (pb.r1 - 1e-3)));
      EXPECT_LE(err, prev) << "lambda " << pb.lam << " rtol " << cfg.rtol;
      prev = err;
      cfg.rtol *= 0.5;
      cfg.atol *= 0.5;
    }
  }
}

TEST(Integrate, Deterministic) {
  const ProfileState init{1e-3, 0.7, -0.1, -0.1, 2.0, 0.0};
  const auto a = integrate_profile(init, paper_constants(), IntegratorConfig{});
  const auto b = integrate_profile(init, paper_constants(), IntegratorConfig{});
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(a.raw() == b.raw());
}

TEST(Integrate, StepBudgetExhausted) {
  IntegratorConfig cfg;
  cfg.max_steps = 5;
  const auto tr = integrate<1>(linear(-1.0), 0.0 + 1e-3, V1{1.0}, cfg);
  EXPECT_EQ(tr.termination().kind, Termination::StepBudgetExhausted);
  EXPECT_EQ(tr.step_count(), 5u);
  EXPECT_TRUE(tr.termination().is_error());
  EXPECT_EQ(tr.termination().r, tr.r_end());
}

TEST(Integrate, NonFiniteRhsEndsRun) {
  auto f = [](double r, const V1& y) {
    if (r > 1.0) return V1{std::numeric_limits<double>::quiet_NaN()};
    return V1{-y[0]};
  };
  const auto tr = integrate<1>(f, 0.5, V1{1.0}, IntegratorConfig{});
  EXPECT_EQ(tr.termination().kind, Termination::NonFinite);
  EXPECT_LE(tr.r_end(), 1.0);
  EXPECT_GT(tr.r_end(), 1.0 - 1e-6);
}

TEST(Integrate, StepSizeUnderflowOnFiniteTimeSingularity) {
  // y' = y^2, y(0) = 1 blows up at r = 1; with an unreachable threshold the step collapses.
  IntegratorConfig cfg;
  cfg.blowup_threshold = std::numeric_limits<double>::infinity();
  auto f = [](double, const V1& y) { return V1{y[0] * y[0]}; };
  const auto tr = integrate<1>(f, 0.0, V1{1.0}, cfg);
  EXPECT_TRUE(tr.termination().is_error());
  EXPECT_NEAR(tr.r_end(), 1.0, 1e-3);
}

TEST(Integrate, GuardCrossingIsSingularityEvent) {
  // y' = -1 from y = 1: a guard on y changes sign at r = 1.
  auto f = [](double, const V1&) { return V1{-1.0}; };
  auto guard = [](double, const V1& y) { return y[0]; };
  const auto tr = integrate<1>(f, 0.0, V1{1.0}, IntegratorConfig{}, guard);
  EXPECT_EQ(tr.termination().kind, Termination::SingularityEvent);
  EXPECT_NEAR(tr.termination().r, 1.0, 1e-9);
}

TEST(Integrate, LaunchOnSingularityIsReported) {
  const ProfileState init{1.0, 1.0, -0.5, 0.0, 1.0, 0.0};
  const auto tr = integrate_profile(init, paper_constants(), IntegratorConfig{});
  EXPECT_EQ(tr.termination().kind, Termination::SingularityEvent);
  EXPECT_EQ(tr.step_count(), 0u);
  EXPECT_EQ(tr.final_state().u, -0.5);
}

TEST(Integrate, LaunchInsideGuardBandIsReported) {
  // r/2 + U = 0.5e-10 r lies inside the default band of 1e-10 r.
  const ProfileState inside{1.0, 1.0, -0.5 + 0.5e-10, 0.0, 1.0, 0.0};
  EXPECT_EQ(integrate_profile(inside, paper_constants(), IntegratorConfig{}).termination().kind,
            Termination::SingularityEvent);
  const ProfileState outside{1.0, 1.0, -0.5 + 1e-8, 0.0, 1.0, 0.0};
  EXPECT_NE(integrate_profile(outside, paper_constants(), IntegratorConfig{}).termination().kind,
            Termination::SingularityEvent);
}

TEST(SignCrossings, TemperatureTurnsNegative) {
  const ProfileState init{1e-3, 1.0, -0.1, -0.1, 1.0, 0.0};
  const auto tr = integrate_profile(init, paper_constants(), IntegratorConfig{});
  ASSERT_TRUE(tr.first_sign_crossings().theta_negative.has_value());
  const double r = *tr.first_sign_crossings().theta_negative;
  EXPECT_NEAR(tr.state_at(r).theta, 0.0, 1e-8);
  EXPECT_FALSE(tr.first_sign_crossings().p_negative.has_value());
}

TEST(DenseEval, InterpolantDerivativeMatchesRhsAtStepEnds) {
  const PhysConsts c = paper_constants();
  const auto tr = integrate_profile({1e-3, 0.5, -1e-4, -0.1, 1.0, 0.0}, c, IntegratorConfig{});
  const ProfileRhs f{c, kDefaultGuardEps};
  std::size_t checked = 0;
  for (const auto& st : tr.raw().steps()) {
    if (st.r_right > tr.r_end()) break;
    const auto d = st.derivative(st.r_left);
    const auto k1 = f(st.r_left, st.y_left);
    for (std::size_t i = 0; i < 5; ++i) ASSERT_NEAR(d[i], k1[i], 1e-9 * (1.0 + std::abs(k1[i])));
    ++checked;
  }
  EXPECT_GT(checked, 10u);
}
