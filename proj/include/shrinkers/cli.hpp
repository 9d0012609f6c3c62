#pragma once

// Command layer behind the `shrinkers` executable: config parsing and the
// run / sweep / diag subcommands. Exit codes: 0 ok, 2 config error, 3 I/O error.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "shrinkers/diagnostics.hpp"
#include "shrinkers/errors.hpp"
#include "shrinkers/initdata.hpp"
#include "shrinkers/integrator.hpp"
#include "shrinkers/io.hpp"
#include "shrinkers/model.hpp"
#include "shrinkers/profile_trajectory.hpp"
#include "shrinkers/sweep.hpp"

namespace shrinkers::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "regime", "p0", "theta0", "alpha", "delta", "velocity",
      "c_v", "r_gas", "kappa", "mu", "lambda", "d",
      "rtol", "atol", "h_init", "h_min", "h_max", "r_max", "blowup_threshold", "max_steps", "guard_eps",
      "samples", "weight_samples", "gamma", "gamma_grid", "quad_rtol", "tail_window",
      "sweep.p0", "sweep.theta0", "sweep.alpha", "dead_band", "stability"};
  return keys;
}

/// Flat `key = value` configuration; `#` starts a comment.
class Config {
public:
  static Config parse(std::istream& in, const std::string& origin = "config") {
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
  }

  /// Parses one `key=value` override.
  void set_pair(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }

  void set(const std::string& key, const std::string& value) {
    if (!known_keys().contains(key)) throw ConfigError("unknown key '" + key + "'");
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.contains(key); }

  const std::string& require(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double number(const std::string& key, double fallback) const {
    return has(key) ? to_number(key, values_.at(key)) : fallback;
  }
  double require_number(const std::string& key) const { return to_number(key, require(key)); }

  long long integer(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const std::string& s = values_.at(key);
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
      throw ConfigError("key '" + key + "': expected an integer, got '" + s + "'");
    return v;
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(require(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_number(key, trim(item)));
    return out;
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& s = values_.at(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + s + "'");
  }

private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static double to_number(const std::string& key, const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty())
      throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
    return v;
  }

  std::map<std::string, std::string> values_;
};

enum class Command { Run, Sweep, Diag };

/// Everything a subcommand needs, resolved from a Config.
struct RunConfig {
  Regime regime = Regime::Cavitating;
  PhysConsts consts{};
  IntegratorConfig integrator{};
  double guard_eps = kDefaultGuardEps;
  double p0 = 1.0;
  double theta0 = 1.0;
  double alpha = 0.1;
  double delta = kDefaultCavitatingDelta;
  VelocitySeed velocity = VelocitySeed::FixedVelocity;
  int samples = 201;
  int weight_samples = 11;
  std::optional<DiagnosticsConfig> diag;  // present when gamma is configured
  std::vector<double> gamma_grid;
  double quad_rtol = 1e-8;
  double tail_window = 0.2;
  SweepSpec sweep{};
};

inline RunConfig resolve(const Config& cfg, Command cmd) {
  RunConfig rc;
  const std::string regime = cfg.require("regime");
  if (regime == "cavitating")
    rc.regime = Regime::Cavitating;
  else if (regime == "smooth")
    rc.regime = Regime::Smooth;
  else
    throw ConfigError("key 'regime': expected cavitating or smooth, got '" + regime + "'");

  rc.consts.c_v = cfg.number("c_v", rc.consts.c_v);
  rc.consts.r_gas = cfg.number("r_gas", rc.consts.r_gas);
  rc.consts.kappa = cfg.number("kappa", rc.consts.kappa);
  rc.consts.mu = cfg.number("mu", rc.consts.mu);
  rc.consts.lambda = cfg.number("lambda", rc.consts.lambda);
  rc.consts.d = static_cast<int>(cfg.integer("d", rc.consts.d));
  rc.consts.validate();

  auto& ic = rc.integrator;
  ic.rtol = cfg.number("rtol", ic.rtol);
  ic.atol = cfg.number("atol", ic.atol);
  ic.h_init = cfg.number("h_init", ic.h_init);
  ic.h_min = cfg.number("h_min", ic.h_min);
  ic.h_max = cfg.number("h_max", ic.h_max);
  ic.r_max = cfg.number("r_max", ic.r_max);
  ic.blowup_threshold = cfg.number("blowup_threshold", ic.blowup_threshold);
  ic.max_steps = cfg.integer("max_steps", ic.max_steps);
  ic.validate();
  rc.guard_eps = cfg.number("guard_eps", rc.guard_eps);
  if (!(rc.guard_eps > 0.0)) throw ConfigError("key 'guard_eps': must be positive");

  const std::string vel = cfg.text("velocity", "fixed");
  if (vel == "fixed")
    rc.velocity = VelocitySeed::FixedVelocity;
  else if (vel == "slope")
    rc.velocity = VelocitySeed::AlphaSlope;
  else
    throw ConfigError("key 'velocity': expected fixed or slope, got '" + vel + "'");

  rc.delta = cfg.number("delta", rc.regime == Regime::Cavitating ? kDefaultCavitatingDelta : kDefaultSmoothDelta);
  rc.samples = static_cast<int>(cfg.integer("samples", rc.samples));
  rc.weight_samples = static_cast<int>(cfg.integer("weight_samples", rc.weight_samples));
  if (rc.samples < 1 || rc.weight_samples < 1) throw ConfigError("samples and weight_samples must be >= 1");
  rc.quad_rtol = cfg.number("quad_rtol", rc.quad_rtol);
  rc.tail_window = cfg.number("tail_window", rc.tail_window);

  if (cmd == Command::Diag || cfg.has("gamma")) {
    DiagnosticsConfig dc;
    dc.gamma = cfg.require_number("gamma");
    dc.quad_rtol = rc.quad_rtol;
    dc.tail_window = rc.tail_window;
    dc.validate(rc.consts.d);
    rc.diag = dc;
    rc.gamma_grid = cfg.has("gamma_grid") ? cfg.list("gamma_grid")
                                          : std::vector<double>{dc.gamma, 1.5 * dc.gamma, 2 * dc.gamma, 4 * dc.gamma};
    for (double g : rc.gamma_grid)
      if (!(g > rc.consts.d)) throw ConfigError("key 'gamma_grid': every gamma must exceed d");
  }

  const bool sweeping = cmd == Command::Sweep;
  auto param = [&](const std::string& key, Param p) -> double {
    if (sweeping && cfg.has("sweep." + key)) return 0.0;
    if (rc.regime == Regime::Smooth && p == Param::Alpha) return 0.0;
    return cfg.require_number(key);
  };
  rc.p0 = param("p0", Param::P0);
  rc.theta0 = param("theta0", Param::Theta0);
  rc.alpha = param("alpha", Param::Alpha);

  if (!sweeping) {
    // Surface launch-parameter violations as config errors.
    if (rc.regime == Regime::Cavitating)
      CavitatingParams{rc.delta, rc.p0, rc.alpha, rc.theta0}.validate();
    else
      SmoothParams{rc.delta, rc.p0, rc.theta0}.validate();
    return rc;
  }

  auto& sp = rc.sweep;
  sp.regime = rc.regime;
  sp.p0 = rc.p0;
  sp.theta0 = rc.theta0;
  sp.alpha = rc.alpha;
  sp.delta = rc.delta;
  sp.consts = rc.consts;
  sp.integrator = rc.integrator;
  sp.guard_eps = rc.guard_eps;
  sp.velocity = rc.velocity;
  sp.dead_band = cfg.number("dead_band", sp.dead_band);
  sp.check_stability = cfg.flag("stability", sp.check_stability);
  for (const auto& [key, p] : {std::pair{"sweep.p0", Param::P0}, std::pair{"sweep.theta0", Param::Theta0},
                               std::pair{"sweep.alpha", Param::Alpha}}) {
    if (!cfg.has(key)) continue;
    const auto v = cfg.list(key);
    if (v.size() != 3 || v[2] < 1 || v[2] != static_cast<int>(v[2]))
      throw ConfigError(std::string("key '") + key + "': expected min,max,count");
    sp.axes.push_back({p, v[0], v[1], static_cast<int>(v[2])});
  }
  if (sp.axes.empty()) throw ConfigError("missing required key 'sweep.p0', 'sweep.theta0' or 'sweep.alpha'");
  sp.validate();
  return rc;
}

inline ProfileState launch(const RunConfig& rc) {
  if (rc.regime == Regime::Cavitating)
    return cavitating_state({rc.delta, rc.p0, rc.alpha, rc.theta0}, rc.velocity);
  return smooth_state({rc.delta, rc.p0, rc.theta0}, rc.consts);
}

namespace detail {

using io::format_number;

inline std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_number(xs[i]);
  }
  return out;
}

inline std::string optional_radius(const std::optional<double>& r) {
  return r ? format_number(*r) : std::string("none");
}

}  // namespace detail

/// Plain-text `key = value` report for one trajectory.
inline void write_report(std::ostream& os, const RunConfig& rc, const ProfileTrajectory& tr) {
  using detail::format_number;
  const auto l = tr.initial();
  os << "# shrinkers profile report\n";
  os << "regime = " << to_string(rc.regime) << '\n';
  if (rc.regime == Regime::Cavitating)
    os << "velocity_seed = " << (rc.velocity == VelocitySeed::FixedVelocity ? "fixed" : "slope") << '\n';
  os << "launch = " << detail::join({l.r, l.p, l.u, l.v, l.theta, l.s}) << '\n';
  os << "blowup_threshold = " << format_number(rc.integrator.blowup_threshold) << '\n';
  os << "r_max = " << format_number(rc.integrator.r_max) << '\n';
  os << "termination = " << to_string(tr.termination().kind) << '\n';
  os << "termination.r = " << format_number(tr.termination().r) << '\n';
  os << "steps = " << tr.step_count() << '\n';
  const auto f = tr.final_state();
  os << "final = " << detail::join({f.r, f.p, f.u, f.v, f.theta, f.s}) << '\n';
  os << "first_negative.p = " << detail::optional_radius(tr.first_sign_crossings().p_negative) << '\n';
  os << "first_negative.theta = " << detail::optional_radius(tr.first_sign_crossings().theta_negative) << '\n';
  os << "classification = " << to_string(classify(tr, rc.sweep.dead_band)) << '\n';

  if (!rc.diag) {
    os << "diagnostics = skipped (set gamma to enable)\n";
    return;
  }
  DiagnosticsReport rep;
  try {
    rep = diagnose(tr, rc.consts, *rc.diag, rc.gamma_grid, rc.weight_samples);
  } catch (const QuadratureFailure& e) {
    os << "diagnostics = failed: " << e.what() << '\n';
    return;
  }
  os << "weights.r = " << detail::join(rep.weights.radii) << '\n';
  os << "weights.z = " << detail::join(rep.weights.z) << '\n';
  os << "weights.w = " << detail::join(rep.weights.w) << '\n';
  os << "weights.origin_correction = " << format_number(rep.weights.origin_correction)
     << "  # [0, delta] from launch ansatz\n";
  if (!rep.smallness.empty()) {
    os << "smallness.range = " << format_number(rep.smallness.front().second.r_lo) << ','
       << format_number(rep.smallness.front().second.r_hi) << '\n';
    os << "smallness.sup_terms = " << format_number(rep.smallness.front().second.sup_terms) << '\n';
  }
  for (const auto& [g, s] : rep.smallness)
    os << "smallness[gamma=" << format_number(g) << "] = " << format_number(s.value) << '\n';
  os << "energy.range = " << format_number(rep.energy.r_lo) << ',' << format_number(rep.energy.r_hi) << '\n';
  for (const auto& e : rep.energy.integrals)
    os << "energy." << e.name << " = " << format_number(e.value) << (e.divergent ? "  # divergent" : "") << '\n';
  os << "energy.scaled_p_u3.note = epsilon taken as 1/R\n";
  os << "energy.identity_d = " << format_number(rep.energy.identity_d.value)
     << (rep.energy.identity_d.divergent ? "  # divergent" : "") << '\n';
  if (rep.continuity)
    os << "continuity_oracle.max_rel_err = " << format_number(rep.continuity->max_rel_err) << '\n';
  else
    os << "continuity_oracle = NotApplicable\n";
  if (!rep.tail) {
    os << "tail_fit = NotApplicable\n";
  } else {
    const auto& t = *rep.tail;
    os << "tail_fit.window = " << format_number(t.r_lo) << ',' << format_number(t.r_hi) << '\n';
    os << "tail_fit.p_inf = " << format_number(t.p_inf) << "  # drift " << format_number(t.p_drift) << '\n';
    os << "tail_fit.u_inf = " << format_number(t.u_inf) << "  # drift " << format_number(t.u_drift) << '\n';
    os << "tail_fit.theta_inf = " << format_number(t.theta_inf) << "  # drift " << format_number(t.theta_drift)
       << '\n';
  }
}

namespace detail {

inline std::filesystem::path ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  return dir;
}

template <class Fn>
void write_file(const std::filesystem::path& path, const Fn& fn) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  fn(os);
  os.flush();
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline int cmd_run(const RunConfig& rc, const std::filesystem::path& out_dir, std::ostream& log) {
  const auto dir = detail::ensure_dir(out_dir);
  const auto tr = integrate_profile(launch(rc), rc.consts, rc.integrator, rc.guard_eps);
  detail::write_file(dir / "trajectory.csv", [&](std::ostream& os) { io::write_trajectory_csv(os, tr, rc.samples); });
  detail::write_file(dir / "report.txt", [&](std::ostream& os) { write_report(os, rc, tr); });
  log << "run: " << to_string(tr.termination().kind) << " at r = " << io::format_number(tr.termination().r)
      << " after " << tr.step_count() << " steps\n";
  return kExitOk;
}

inline int cmd_diag(const RunConfig& rc, const std::filesystem::path& out_dir, std::ostream& log) {
  const auto dir = detail::ensure_dir(out_dir);
  const auto tr = integrate_profile(launch(rc), rc.consts, rc.integrator, rc.guard_eps);
  detail::write_file(dir / "diagnostics.txt", [&](std::ostream& os) { write_report(os, rc, tr); });
  log << "diag: wrote " << (dir / "diagnostics.txt").string() << '\n';
  return kExitOk;
}

inline int cmd_sweep(const RunConfig& rc, const std::filesystem::path& out_dir, unsigned threads,
                     std::ostream& log) {
  const auto dir = detail::ensure_dir(out_dir);
  const auto cells = run_sweep(rc.sweep, threads);
  detail::write_file(dir / "sweep.csv", [&](std::ostream& os) { io::write_sweep_csv(os, cells); });
  detail::write_file(dir / "phase.ppm",
                     [&](std::ostream& os) { io::write_phase_ppm(os, rc.sweep.shape(), cells); });
  detail::write_file(dir / "anomalies.csv", [&](std::ostream& os) { io::write_anomalies_csv(os, cells); });
  std::array<std::size_t, 4> counts{};
  for (const auto& c : cells) ++counts[static_cast<std::size_t>(c.classification)];
  log << "sweep: " << cells.size() << " cells; NegativeSign " << counts[0] << ", PositiveSign " << counts[1]
      << ", SolverError " << counts[2] << ", Indeterminate " << counts[3] << '\n';
  return kExitOk;
}

inline constexpr std::string_view kUsage =
    "usage: shrinkers <run|sweep|diag> [--config PATH] [--out DIR] [--threads N] [--set key=value]...\n";

/// Entry point; args excludes the program name.
inline int main(std::span<const std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    if (args.empty()) throw ConfigError("missing subcommand");
    Command cmd;
    if (args[0] == "run")
      cmd = Command::Run;
    else if (args[0] == "sweep")
      cmd = Command::Sweep;
    else if (args[0] == "diag")
      cmd = Command::Diag;
    else if (args[0] == "--help" || args[0] == "-h") {
      out << kUsage;
      return kExitOk;
    } else
      throw ConfigError("unknown subcommand '" + args[0] + "'");

    std::optional<std::string> config_path;
    std::filesystem::path out_dir = ".";
    unsigned threads = 1;
    std::vector<std::string> overrides;
    for (std::size_t i = 1; i < args.size(); ++i) {
      const std::string& a = args[i];
      auto value = [&]() -> const std::string& {
        if (i + 1 >= args.size()) throw ConfigError("flag " + a + " needs a value");
        return args[++i];
      };
      if (a == "--config")
        config_path = value();
      else if (a == "--out")
        out_dir = value();
      else if (a == "--threads") {
        const std::string& v = value();
        unsigned t = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), t);
        if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || t == 0)
          throw ConfigError("--threads expects a positive integer");
        threads = t;
      } else if (a == "--set")
        overrides.push_back(value());
      else
        throw ConfigError("unknown flag '" + a + "'");
    }

    Config cfg;
    if (config_path) {
      std::ifstream in(*config_path);
      if (!in) throw IoError("cannot read config file " + *config_path);
      cfg = Config::parse(in, *config_path);
    }
    for (const auto& kv : overrides) cfg.set_pair(kv);
    const RunConfig rc = resolve(cfg, cmd);

    switch (cmd) {
      case Command::Run: return cmd_run(rc, out_dir, out);
      case Command::Sweep: return cmd_sweep(rc, out_dir, threads, out);
      case Command::Diag: return cmd_diag(rc, out_dir, out);
    }
    return kExitOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {  // ConfigError and parameter invariants
    err << "config error: " << e.what() << '\n' << kUsage;
    return kExitConfig;
  }
}

}  // namespace shrinkers::cli
