#include <algorithm>
#include <cmath>
#include <sstream>

#include "swarmloc/assignment_bp.hpp"
#include "swarmloc/crlb.hpp"
#include "swarmloc/experiments.hpp"
#include "swarmloc/noise_kernel.hpp"
#include "swarmloc/positioning.hpp"
#include "swarmloc/tip.hpp"
#include "swarmloc/velocity.hpp"

namespace swarmloc {

namespace {

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}

OracleOutcome outcome(const std::string& name, bool ok, const std::string& detail) {
  return {name, ok, detail};
}

std::string fmt(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

OracleOutcome kernel_mass() {
  const NoiseKernel g(10.0);
  // Simpson's rule over the support.
  const int steps = 4000;
  const double a = -20.0, b = 20.0, h = (b - a) / steps;
  double s = g(a) + g(b);
  for (int k = 1; k < steps; ++k) s += (k % 2 ? 4.0 : 2.0) * g(a + k * h);
  const double mass = s * h / 3.0;
  const double err = std::abs(mass - 1.0);
  return outcome("kernel_unit_mass", err < 1e-9 && std::abs(g(0.0) - g.peak()) < 1e-15,
                 "|mass - 1| = " + fmt(err));
}

OracleOutcome check_identities(std::uint64_t seed) {
  RandomSwarmParams params;
  params.n = 4;
  params.anchor_positions = {};
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const SwarmState s = sample_random_swarm(params, run_seed(seed, trial, 20));
    const auto p = s.positions();
    const auto v = s.velocities();
    const double d = red_distance(p[0], p[1], p[2]) - red_distance(p[0], p[1], p[3]) +
                     red_distance(p[0], p[2], p[3]) - red_distance(p[1], p[3], p[2]);
    const double scale_d = red_distance(p[0], p[1], p[2]) + red_distance(p[0], p[1], p[3]) + 1.0;
    const double w = radial_velocity(p, v, 0, 1, 2) + radial_velocity(p, v, 0, 1, 3) -
                     radial_velocity(p, v, 2, 3, 0) - radial_velocity(p, v, 2, 3, 1);
    const double scale_w = std::abs(radial_velocity(p, v, 0, 1, 2)) + 1.0;
    worst = std::max({worst, std::abs(d) / scale_d, std::abs(w) / scale_w});
  }
  return outcome("check_node_identities", worst < 1e-9, "max relative residual " + fmt(worst));
}

OracleOutcome gradient_fd(std::uint64_t seed) {
  RandomSwarmParams params;
  params.n = 6;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const SwarmState s = sample_random_swarm(params, run_seed(seed, trial, 21));
    const SwarmState probe = sample_random_swarm(params, run_seed(seed, trial, 22));
    const std::size_t n = s.size();
    OrderedDistances obs(n);
    const auto p = s.positions();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          if (i != j && k != i && k != j) obs.at(i, j, k) = red_distance(p[i], p[j], p[k]);
    const Stacked t = stack(probe.positions());
    const Stacked g = gradient(t, obs);
    Stacked fd(t.size());
    const double h = 1e-3;
    for (Eigen::Index c = 0; c < t.size(); ++c) {
      Stacked a = t, b = t;
      a[c] += h;
      b[c] -= h;
      fd[c] = (square_error(a, obs) - square_error(b, obs)) / (2 * h);
    }
    worst = std::max(worst, rel_err(g, fd));
  }
  return outcome("gradient_finite_difference", worst < 1e-5, "max relative error " + fmt(worst));
}

OracleOutcome jacobian_fd(std::uint64_t seed) {
  RandomSwarmParams params;
  params.n = 6;
  double worst = 0.0;
  const double h = 1e-4;
  for (int trial = 0; trial < 20; ++trial) {
    const SwarmState s = sample_random_swarm(params, run_seed(seed, trial, 23));
    const auto p = s.positions();
    const auto v = s.velocities();
    const auto mask = s.anchor_mask();
    const std::size_t i = 4, j = 5, k = 1 + static_cast<std::size_t>(trial) % 3;
    for (std::size_t kk : {k, j}) {
      const auto [dp, dv] = omega_jacobians(p, v, mask, i, j, kk);
      Eigen::VectorXd fp(dp.size()), fv(dv.size()), fd_delta(dp.size());
      Eigen::Index c = 0;
      for (std::size_t u = 0; u < p.size(); ++u) {
        if (mask[u]) continue;
        for (int a = 0; a < 3; ++a, ++c) {
          auto pp = p, pm = p, vp = v, vm = v;
          pp[u][a] += h;
          pm[u][a] -= h;
          vp[u][a] += h;
          vm[u][a] -= h;
          fp[c] = (radial_velocity(pp, v, i, j, kk) - radial_velocity(pm, v, i, j, kk)) / (2 * h);
          fv[c] = (radial_velocity(p, vp, i, j, kk) - radial_velocity(p, vm, i, j, kk)) / (2 * h);
          if (kk != j) {
            fd_delta[c] = (red_distance(pp[i], pp[j], pp[kk]) - red_distance(pm[i], pm[j], pm[kk])) /
                          (2 * h);
          }
        }
      }
      worst = std::max({worst, rel_err(dp, fp), rel_err(dv, fv)});
      if (kk != j) worst = std::max(worst, rel_err(delta_position_jacobian(p, mask, i, j, kk), fd_delta));
    }
  }
  return outcome("jacobian_finite_difference", worst < 1e-4, "max relative error " + fmt(worst));
}

OracleOutcome bp_vs_exhaustive(std::uint64_t seed) {
  RandomSwarmParams params;
  params.n = 5;
  int agree = 0;
  const int trials = 5;
  OtfsGrid grid;
  for (int trial = 0; trial < trials; ++trial) {
    const SwarmState s = sample_random_swarm(params, run_seed(seed, trial, 24));
    const MeasurementSet m = build_measurements(s, grid, NoiseModel::noiseless);
    BpConfig cfg;
    const AssignmentMaps bp = estimate_maps(compute_marginals(m, cfg).marginals);
    const AssignmentMaps ml = brute_force_maps(m.lists, m.likelihood_grid());
    agree += (bp == ml && ml == m.truth_maps) ? 1 : 0;
  }
  return outcome("bp_matches_exhaustive_search", agree == trials,
                 std::to_string(agree) + "/" + std::to_string(trials) + " noiseless instances");
}

OracleOutcome velocity_recovery(std::uint64_t seed) {
  RandomSwarmParams params;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const SwarmState s = sample_random_swarm(params, run_seed(seed, trial, 25));
    const MeasurementSet m = build_measurements(s, OtfsGrid{}, NoiseModel::noiseless);
    const auto obs = apply_maps(m.lists, m.truth_maps);
    const auto est = estimate_velocities(build_design(s.positions(), s.anchor_mask()), obs.velocity);
    for (std::size_t u = 0; u < s.size(); ++u)
      worst = std::max(worst, (est.velocities[u] - s[u].velocity).norm());
  }
  return outcome("velocity_exact_recovery", worst < 1e-6, "max error " + fmt(worst) + " m/s");
}

OracleOutcome noiseless_pipeline(std::uint64_t seed) {
  RandomSwarmParams params;
  params.n = 5;
  double worst_p = 0.0, worst_v = 0.0;
  int map_ok = 0;
  const int trials = 5;
  for (int trial = 0; trial < trials; ++trial) {
    const SwarmState s = sample_random_swarm(params, run_seed(seed, trial, 26));
    const MeasurementSet m = build_measurements(s, OtfsGrid{}, NoiseModel::noiseless);
    TipConfig cfg;
    cfg.gd.epsilon = 1e-12;
    cfg.gd.max_iterations = 2000;
    const EstimationResult r = run_cold_start(m, Anchors::from_swarm(s), cfg, run_seed(seed, trial, 27));
    map_ok += r.initial_maps == m.truth_maps ? 1 : 0;
    for (std::size_t u = 0; u < s.size(); ++u) {
      worst_p = std::max(worst_p, (r.positions[u] - s[u].position).norm());
      worst_v = std::max(worst_v, (r.velocities[u] - s[u].velocity).norm());
    }
  }
  return outcome("noiseless_end_to_end", map_ok == trials && worst_p < 1e-4 && worst_v < 1e-4,
                 "maps " + std::to_string(map_ok) + "/" + std::to_string(trials) +
                     ", max position error " + fmt(worst_p) + " m, max velocity error " +
                     fmt(worst_v) + " m/s");
}

}  // namespace

std::vector<OracleOutcome> run_oracle_checks(std::uint64_t seed) {
  return {kernel_mass(),          check_identities(seed),  gradient_fd(seed),
          jacobian_fd(seed),      bp_vs_exhaustive(seed),  velocity_recovery(seed),
          noiseless_pipeline(seed)};
}

}  // namespace swarmloc
