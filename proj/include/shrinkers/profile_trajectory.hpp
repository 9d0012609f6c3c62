#pragma once

#include <optional>
#include <vector>

#include "shrinkers/integrator.hpp"
#include "shrinkers/model.hpp"

namespace shrinkers {

/// Radii where P and Theta first become negative, if ever.
struct SignCrossings {
  std::optional<double> p_negative;
  std::optional<double> theta_negative;
  friend bool operator==(const SignCrossings&, const SignCrossings&) = default;
};

/// Integrated profile: the 5-component trajectory plus model metadata.
class ProfileTrajectory {
public:
  ProfileTrajectory(Trajectory<5> traj, PhysConsts consts, SignCrossings crossings)
      : traj_(std::move(traj)), consts_(consts), crossings_(crossings) {}

  double r_begin() const noexcept { return traj_.r_begin(); }
  double r_end() const noexcept { return traj_.r_end(); }
  ProfileState initial() const noexcept { return ProfileState::from(traj_.r_begin(), traj_.initial()); }
  ProfileState final_state() const noexcept { return ProfileState::from(traj_.r_end(), traj_.final_state()); }
  const TerminationKind& termination() const noexcept { return traj_.termination(); }
  std::size_t step_count() const noexcept { return traj_.step_count(); }
  const SignCrossings& first_sign_crossings() const noexcept { return crossings_; }
  const PhysConsts& consts() const noexcept { return consts_; }
  const Trajectory<5>& raw() const noexcept { return traj_; }

  /// Dense-output evaluation; exact at step endpoints. Throws OutOfRangeError outside [r_begin, r_end].
  ProfileState state_at(double r) const { return ProfileState::from(r, traj_.eval(r)); }

  /// Derivative of the interpolant (not of the model), for residual checks.
  RhsDerivative interpolant_derivative(double r) const {
    const auto d = traj_.derivative(r);
    return {d[0], d[1], d[2], d[3], d[4]};
  }

  /// Step endpoints clipped to [r_begin, r_end]; quadrature panels follow these.
  std::vector<double> breakpoints() const {
    std::vector<double> out{r_begin()};
    for (const auto& st : traj_.steps()) {
      if (st.r_right >= r_end()) break;
      out.push_back(st.r_right);
    }
    if (r_end() > out.back()) out.push_back(r_end());
    return out;
  }

  friend bool operator==(const ProfileTrajectory&, const ProfileTrajectory&) = default;

private:
  Trajectory<5> traj_;
  PhysConsts consts_;
  SignCrossings crossings_;
};

inline ProfileState dense_eval(const ProfileTrajectory& traj, double r) { return traj.state_at(r); }

namespace detail {

inline std::optional<double> first_negative(const Trajectory<5>& tr, std::size_t comp) {
  if (tr.initial()[comp] < 0.0) return tr.r_begin();
  for (const auto& st : tr.steps()) {
    const double hi_r = std::min(st.r_right, tr.r_end());
    if (hi_r <= st.r_left) break;
    if (st.eval(hi_r)[comp] < 0.0)
      return dopri::bisect(st.r_left, hi_r, [&](double x) { return st.eval(x)[comp] < 0.0; });
    if (st.r_right >= tr.r_end()) break;
  }
  return std::nullopt;
}

}  // namespace detail

/// Integrates the profile equations outward from initial.r (= delta).
inline ProfileTrajectory integrate_profile(const ProfileState& initial, const PhysConsts& consts,
                                           const IntegratorConfig& cfg, double guard_eps = kDefaultGuardEps) {
  consts.validate();
  if (!(initial.r > 0.0)) throw std::invalid_argument("integrate_profile: launch radius must be positive");
  const ProfileRhs f{consts, guard_eps};
  // Signed distance to the r/2 + U = 0 degeneracy, offset by the guard band.
  auto guard = [guard_eps](double r, const ProfileState::Vector& y) {
    const double a = 0.5 * r + y[1];
    const double band = guard_eps * r;
    if (a > band) return a - band;
    if (a < -band) return a + band;
    return 0.0;
  };
  auto tr = integrate<5>(f, initial.r, initial.vec(), cfg, guard);
  SignCrossings sc{detail::first_negative(tr, 0), detail::first_negative(tr, 3)};
  return ProfileTrajectory(std::move(tr), consts, sc);
}

}  // namespace shrinkers
