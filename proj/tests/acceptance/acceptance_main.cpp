// End-to-end acceptance run. One PASS/FAIL line per criterion; exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "swarmloc/assignment_bp.hpp"
#include "swarmloc/crlb.hpp"
#include "swarmloc/experiments.hpp"
#include "swarmloc/positioning.hpp"
#include "swarmloc/tip.hpp"

using namespace swarmloc;

namespace {

constexpr double kC = 3e8;  // figure runs use the rounded speed of light
constexpr std::uint64_t kSeed = 1;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig base_config() {
  ExperimentConfig cfg;
  cfg.c = kC;
  cfg.runs = 100;
  cfg.seed = kSeed;
  cfg.swarm.n = 8;
  return cfg;
}

const RunRecord& find(const std::vector<RunRecord>& records, TipMode mode, int turbo, int gd_iterations,
                      double bandwidth_hz) {
  for (const auto& r : records) {
    if (r.mode == mode && (mode == TipMode::genie_aided || r.turbo_iterations == turbo) &&
        r.gd_iterations == gd_iterations && r.bandwidth_hz == bandwidth_hz) {
      return r;
    }
  }
  throw std::runtime_error("missing sweep point");
}

OrderedDistances exact_observations(const std::vector<Vec3>& p) {
  const std::size_t n = p.size();
  OrderedDistances obs(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        if (i != j && k != i && k != j) obs.at(i, j, k) = red_distance(p[i], p[j], p[k]);
  return obs;
}

// 1. Noiseless end-to-end recovery.
void noiseless_end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  int ok = 0, total = 0;
  double worst_p = 0.0, worst_v = 0.0;
  for (int n : {5, 6}) {
    RandomSwarmParams params;
    params.n = n;
    TipConfig cfg;
    cfg.turbo_iterations = 1;
    cfg.bp.iterations = 2;
    for (int r = 0; r < 100; ++r) {
      const SwarmState s = sample_random_swarm(params, run_seed(kSeed, static_cast<std::uint64_t>(r), 100 + n));
      OtfsGrid grid;
      grid.c = kC;
      const MeasurementSet m = build_measurements(s, grid, NoiseModel::noiseless);
      const EstimationResult e = run_cold_start(m, Anchors::from_swarm(s), cfg, run_seed(kSeed, r, 110 + n));
      double ep = 0.0, ev = 0.0;
      for (std::size_t u = 0; u < s.size(); ++u) {
        ep = std::max(ep, (e.positions[u] - s[u].position).norm());
        ev = std::max(ev, (e.velocities[u] - s[u].velocity).norm());
      }
      worst_p = std::max(worst_p, ep);
      worst_v = std::max(worst_v, ev);
      ++total;
      if (e.initial_maps == m.truth_maps && e.maps == m.truth_maps && ep <= 1e-4 && ev <= 1e-4) ++ok;
    }
  }
  const double wall = seconds_since(t0);
  report(1, "noiseless end-to-end", ok == total && wall < 60.0,
         std::to_string(ok) + "/" + std::to_string(total) + " runs exact, max |dp| " + fmt(worst_p) +
             " m, max |dv| " + fmt(worst_v) + " m/s, " + fmt(wall, 3) + " s (limit 60 s)");
}

// 2. B = 30 MHz cold start against genie-aided.
void cold_start_30mhz() {
  ExperimentConfig cfg = base_config();
  cfg.bandwidths_hz = {30e6};
  cfg.gd_iterations = {30, 100};
  cfg.turbo_iterations = {1};
  cfg.modes = {TipMode::cold_start, TipMode::genie_aided};
  const auto rec = run_sweep(cfg);
  const double at30 = find(rec, TipMode::cold_start, 1, 30, 30e6).rmse_p;
  const double tip = find(rec, TipMode::cold_start, 1, 100, 30e6).rmse_p;
  const double ga = find(rec, TipMode::genie_aided, 1, 100, 30e6).rmse_p;
  const bool pass = at30 >= 0.5 && at30 <= 2.0 && std::abs(tip - ga) <= 0.10 * ga;
  report(2, "30 MHz cold start", pass,
         "RMSE_p(I_alpha=30) " + fmt(at30) + " m in [0.5, 2.0]; RMSE_p(I_alpha=100) TIP " + fmt(tip) +
             " m vs GA " + fmt(ga) + " m, gap " + fmt(100 * std::abs(tip - ga) / ga, 3) + "% (limit 10%)");
}

// 3. B = 3 MHz, RMSE_p against the number of turbo iterations.
void turbo_iterations_3mhz() {
  ExperimentConfig cfg = base_config();
  cfg.bandwidths_hz = {3e6};
  cfg.turbo_iterations = {0, 1, 2};
  cfg.modes = {TipMode::cold_start, TipMode::genie_aided};
  auto rec = run_sweep(cfg);
  const double l0 = find(rec, TipMode::cold_start, 0, 100, 3e6).rmse_p;
  const double l1 = find(rec, TipMode::cold_start, 1, 100, 3e6).rmse_p;
  const double l2 = find(rec, TipMode::cold_start, 2, 100, 3e6).rmse_p;
  const double ga = find(rec, TipMode::genie_aided, 0, 100, 3e6).rmse_p;
  const bool pass = l0 >= 15 && l0 <= 30 && l1 >= 4 && l1 <= 12 && std::abs(l2 - ga) <= 0.20 * ga;
  report(3, "3 MHz turbo iterations", pass,
         "RMSE_p L=0 " + fmt(l0) + " m in [15, 30], L=1 " + fmt(l1) + " m in [4, 12], L=2 " + fmt(l2) +
             " m vs GA " + fmt(ga) + " m, gap " + fmt(100 * std::abs(l2 - ga) / ga, 3) + "% (limit 20%)");
}

// 4. Velocity accuracy at B = 300 MHz.
void velocity_accuracy() {
  ExperimentConfig cfg = base_config();
  cfg.bandwidths_hz = {300e6};
  cfg.frames_s = {20e-3};
  cfg.carrier_hz = 5e9;
  cfg.turbo_iterations = {5};
  const auto rec = run_sweep(cfg);
  const double v = rec.front().rmse_v;
  report(4, "velocity accuracy", v >= 0.15 && v <= 0.45,
         "RMSE_v " + fmt(v) + " m/s in [0.15, 0.45], velocity step 3 m/s");
}

// 5. Quadruple identities on noiseless values.
void check_identities() {
  RandomSwarmParams params;
  params.n = 4;
  params.anchor_positions.clear();
  double worst_d = 0.0, worst_w = 0.0;
  for (int q = 0; q < 1000; ++q) {
    const SwarmState s = sample_random_swarm(params, run_seed(kSeed, q, 200));
    const auto p = s.positions();
    const auto v = s.velocities();
    const std::size_t i = 0, j = 1, k = 2, h = 3;
    const double d1 = red_distance(p[i], p[j], p[k]), d2 = red_distance(p[i], p[j], p[h]);
    const double d3 = red_distance(p[i], p[k], p[h]), d4 = red_distance(p[j], p[h], p[k]);
    const double scale_d = std::max({std::abs(d1), std::abs(d2), std::abs(d3), std::abs(d4), 1.0});
    worst_d = std::max(worst_d, std::abs(d1 - d2 + d3 - d4) / scale_d);
    const double w1 = radial_velocity(p, v, i, j, k), w2 = radial_velocity(p, v, i, j, h);
    const double w3 = radial_velocity(p, v, k, h, i), w4 = radial_velocity(p, v, k, h, j);
    const double scale_w = std::max({std::abs(w1), std::abs(w2), std::abs(w3), std::abs(w4), 1.0});
    worst_w = std::max(worst_w, std::abs(w1 + w2 - w3 - w4) / scale_w);
  }
  report(5, "check-node identities", worst_d <= 1e-9 && worst_w <= 1e-9,
         "1000 quadruples, max relative residual delay " + fmt(worst_d) + ", Doppler " + fmt(worst_w) +
             " (limit 1e-9)");
}

// 6. Analytic derivatives against central differences.
void derivative_checks() {
  RandomSwarmParams params;
  params.n = 7;
  double worst_g = 0.0, worst_jp = 0.0, worst_jv = 0.0;
  for (int t = 0; t < 50; ++t) {
    const SwarmState s = sample_random_swarm(params, run_seed(kSeed, t, 300));
    const SwarmState probe = sample_random_swarm(params, run_seed(kSeed, t, 301));
    const auto p = s.positions();
    const auto v = s.velocities();
    const auto mask = s.anchor_mask();
    OrderedDistances obs = exact_observations(p);
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 7; ++j)
        for (std::size_t k = 0; k < 7; ++k) obs.at(i, j, k) = quantize(obs.at(i, j, k), 10.0);

    const Stacked x = stack(probe.positions());
    const Stacked g = gradient(x, obs);
    Stacked fd(x.size());
    for (Eigen::Index c = 0; c < x.size(); ++c) {
      Stacked a = x, b = x;
      a[c] += 1e-3;
      b[c] -= 1e-3;
      fd[c] = (square_error(a, obs) - square_error(b, obs)) / 2e-3;
    }
    worst_g = std::max(worst_g, (g - fd).norm() / fd.norm());

    const std::size_t i = 4 + static_cast<std::size_t>(t) % 3, j = (i + 1 - 4) % 3 + 4;
    const std::size_t k = static_cast<std::size_t>(t) % 4;
    for (std::size_t kk : {k, j}) {
      const auto [dp, dv] = omega_jacobians(p, v, mask, i, j, kk);
      Eigen::VectorXd fp(dp.size()), fv(dv.size());
      const double h = 1e-4;
      for (std::size_t u = 4; u < 7; ++u)
        for (int a = 0; a < 3; ++a) {
          auto pp = p, pm = p, vp = v, vm = v;
          pp[u][a] += h;
          pm[u][a] -= h;
          vp[u][a] += h;
          vm[u][a] -= h;
          const auto c = static_cast<Eigen::Index>(3 * (u - 4)) + a;
          fp[c] = (radial_velocity(pp, v, i, j, kk) - radial_velocity(pm, v, i, j, kk)) / (2 * h);
          fv[c] = (radial_velocity(p, vp, i, j, kk) - radial_velocity(p, vm, i, j, kk)) / (2 * h);
        }
      worst_jp = std::max(worst_jp, (dp - fp).norm() / std::max(fp.norm(), 1e-12));
      worst_jv = std::max(worst_jv, (dv - fv).norm() / std::max(fv.norm(), 1e-12));
    }
  }
  report(6, "gradient and Jacobian checks", worst_g < 1e-4 && worst_jp < 1e-4 && worst_jv < 1e-4,
         "50 instances each, max relative error gradient " + fmt(worst_g) + ", d omega/dp " + fmt(worst_jp) +
             ", d omega/dv " + fmt(worst_jv) + " (limit 1e-4)");
}

// 7. BP + greedy against the exhaustive joint maximum likelihood.
void assignment_oracle() {
  RandomSwarmParams params;
  params.n = 5;
  OtfsGrid grid;
  grid.c = kC;
  grid.bandwidth_hz = 30e6;
  int agree_noisy = 0, agree_clean = 0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    const SwarmState s = sample_random_swarm(params, run_seed(kSeed, t, 400));
    const MeasurementSet noisy = build_measurements(s, grid, NoiseModel::quantized);
    const auto bp = estimate_maps(compute_marginals(noisy.lists, grid, BpConfig{}).marginals);
    agree_noisy += bp == brute_force_maps(noisy.lists, grid) ? 1 : 0;
    const MeasurementSet clean = build_measurements(s, grid, NoiseModel::noiseless);
    const auto bpc = estimate_maps(compute_marginals(clean, BpConfig{}).marginals);
    agree_clean += (bpc == brute_force_maps(clean.lists, clean.likelihood_grid()) && bpc == clean.truth_maps) ? 1 : 0;
  }
  report(7, "assignment oracle", agree_noisy >= 45 && agree_clean == trials,
         "N=5, quantized at 30 MHz: " + std::to_string(agree_noisy) + "/50 agree (need 45); noiseless: " +
             std::to_string(agree_clean) + "/50 (need 50)");
}

// 8. Genie-aided RMSE under Gaussian noise against the CRLB.
void bound_consistency() {
  ExperimentConfig cfg = base_config();
  cfg.bandwidths_hz = {3e6, 10e6, 30e6, 100e6, 300e6};
  cfg.modes = {TipMode::genie_aided};
  cfg.noise = NoiseModel::gaussian;
  cfg.with_crlb = true;
  cfg.crlb_samples = 200;
  const auto rec = run_sweep(cfg);
  bool pass = true;
  std::string detail;
  for (const auto& r : rec) {
    const double bp = std::sqrt(r.crlb_p), bv = std::sqrt(r.crlb_v);
    bool ok = r.rmse_p >= bp && r.rmse_v >= bv;
    if (r.bandwidth_hz >= 30e6) ok = ok && r.rmse_p <= 2 * bp && r.rmse_v <= 2 * bv;
    pass = pass && ok;
    detail += "B=" + fmt(r.bandwidth_hz / 1e6, 3) + "MHz p " + fmt(r.rmse_p, 3) + "/" + fmt(bp, 3) + " v " +
              fmt(r.rmse_v, 3) + "/" + fmt(bv, 3) + (ok ? "" : " (violated)") + "; ";
  }
  report(8, "bound consistency", pass, detail + "RMSE >= sqrt(CRLB) everywhere, <= 2x for B >= 30 MHz");
}

// 9. Square error at the truth against E_b.
void eb_threshold() {
  RandomSwarmParams params;
  params.n = 8;
  OtfsGrid grid;
  grid.c = kC;
  grid.bandwidth_hz = 30e6;
  const double eb = residual_bound(8, grid);
  int below = 0, below_twice = 0;
  double mean_ratio = 0.0;
  const int scenarios = 1000;
  for (int r = 0; r < scenarios; ++r) {
    const SwarmState s = sample_random_swarm(params, run_seed(kSeed, r, 500));
    const MeasurementSet m = build_measurements(s, grid);
    const double e = square_error(stack(s.positions()), apply_maps(m.lists, m.truth_maps).distance);
    below += e <= eb ? 1 : 0;
    below_twice += e <= 2 * eb ? 1 : 0;
    mean_ratio += e / eb / scenarios;
  }
  report(9, "E_b threshold", below >= 950,
         "N=8, B=30 MHz: E(truth) <= E_b in " + std::to_string(below) + "/1000 scenarios (need 950); mean E/E_b " +
             fmt(mean_ratio) + "; E(truth) <= 2 E_b in " + std::to_string(below_twice) + "/1000");
}

// 10. Tracking demo over Lissajous trajectories.
void tracking_demo() {
  ExperimentConfig cfg = base_config();
  cfg.epochs = 50;
  cfg.tip.dt = 1.0;
  cfg.turbo_iterations = {5};
  const TrackingSummary fine = summarize_tracking(run_tracking_demo(cfg, 300e6));
  const TrackingSummary coarse = summarize_tracking(run_tracking_demo(cfg, 3e6));
  const bool pass = fine.median_position_error < 1.0 && fine.median_angle_error_deg < 5.0 &&
                    coarse.median_position_error < 30.0 && coarse.fraction_angle_over_30 > 0.0;
  report(10, "tracking demo", pass,
         "300 MHz: median position error " + fmt(fine.median_position_error) + " m (< 1), median angle " +
             fmt(fine.median_angle_error_deg) + " deg (< 5); 3 MHz: median position error " +
             fmt(coarse.median_position_error) + " m (< 30), UAV-epochs over 30 deg " +
             fmt(100 * coarse.fraction_angle_over_30, 3) + "% (> 0)");
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<void (*)()> criteria{noiseless_end_to_end, cold_start_30mhz,      turbo_iterations_3mhz,
                                         velocity_accuracy,    check_identities, derivative_checks,
                                         assignment_oracle,    bound_consistency, eb_threshold,
                                         tracking_demo};
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    try {
      criteria[c]();
    } catch (const std::exception& e) {
      report(static_cast<int>(c + 1), "criterion", false, std::string("threw: ") + e.what());
    }
  }
  std::printf("%d of %zu criteria failed, %.1f s\n", failures, criteria.size(), seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
