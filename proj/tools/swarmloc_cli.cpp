#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swarmloc/assignment_bp.hpp"
#include "swarmloc/crlb.hpp"
#include "swarmloc/errors.hpp"
#include "swarmloc/experiments.hpp"
#include "swarmloc/measurement.hpp"

using namespace swarmloc;

namespace {

// Flags shared by the experiment subcommands. Values only override the
// loaded config when given on the command line.
struct CommonFlags {
  std::string config;
  std::optional<int> n;
  std::vector<double> bandwidths_mhz;
  std::vector<double> frames_ms;
  std::vector<int> turbo;
  std::vector<int> bp_iters;
  std::vector<int> gd_iters;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> noise;
  std::optional<int> threads;
  std::optional<std::string> output;
  std::string log_path;
  bool no_doppler = false;
  bool fast = false;
  std::optional<double> c;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config (default: $SWARMLOC_CONFIG)");
  cmd->add_option("-n,--uavs", f.n, "Swarm size N");
  cmd->add_option("-B,--bandwidth-mhz", f.bandwidths_mhz, "Bandwidths in MHz (list)");
  cmd->add_option("--frame-ms", f.frames_ms, "Frame durations in ms (list)");
  cmd->add_option("-L,--turbo", f.turbo, "Turbo iterations L (list)");
  cmd->add_option("--bp-iterations", f.bp_iters, "BP iterations I_mu (list)");
  cmd->add_option("--gd-iterations", f.gd_iters, "GD iteration cap I_alpha (list)");
  cmd->add_option("-R,--runs", f.runs, "Monte-Carlo runs per point");
  cmd->add_option("--seed", f.seed, "Base seed");
  cmd->add_option("--noise", f.noise, "quantized | gaussian | noiseless");
  cmd->add_option("--threads", f.threads, "Worker threads, 0 = all cores");
  cmd->add_option("-o,--output", f.output, "CSV output path");
  cmd->add_option("--log", f.log_path, "Per-run diagnostics (default: <output>.log)");
  cmd->add_option("--speed-of-light", f.c, "Propagation speed in m/s");
  cmd->add_flag("--no-doppler-checks", f.no_doppler, "Use delay check nodes only in BP");
  cmd->add_flag("--fast", f.fast, "CI profile: N=6, R=20");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig cfg;
  std::string path = f.config;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar)) path = env;
  }
  if (!path.empty()) cfg = load_experiment_config(path);
  if (f.fast) {
    cfg.swarm.n = 6;
    cfg.runs = 20;
  }
  if (f.n) cfg.swarm.n = *f.n;
  if (!f.bandwidths_mhz.empty()) {
    cfg.bandwidths_hz.clear();
    for (double b : f.bandwidths_mhz) cfg.bandwidths_hz.push_back(b * 1e6);
  }
  if (!f.frames_ms.empty()) {
    cfg.frames_s.clear();
    for (double t : f.frames_ms) cfg.frames_s.push_back(t * 1e-3);
  }
  if (!f.turbo.empty()) cfg.turbo_iterations = f.turbo;
  if (!f.bp_iters.empty()) cfg.bp_iterations = f.bp_iters;
  if (!f.gd_iters.empty()) cfg.gd_iterations = f.gd_iters;
  if (f.runs) cfg.runs = *f.runs;
  if (f.seed) cfg.seed = *f.seed;
  if (f.noise) cfg.noise = noise_model_from_string(*f.noise);
  if (f.threads) cfg.threads = *f.threads;
  if (f.output) cfg.output = *f.output;
  if (f.c) cfg.c = *f.c;
  if (f.no_doppler) cfg.tip.bp.use_doppler_checks = false;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

std::string log_path(const CommonFlags& f, const ExperimentConfig& cfg) {
  return f.log_path.empty() ? cfg.output + ".log" : f.log_path;
}

int do_sweep(const CommonFlags& f, const std::vector<std::string>& modes) {
  ExperimentConfig cfg = resolve(f);
  if (!modes.empty()) {
    cfg.modes.clear();
    for (const auto& m : modes) cfg.modes.push_back(tip_mode_from_string(m));
  }
  auto log = open_out(log_path(f, cfg));
  log << "# config\n" << experiment_config_to_json(cfg) << "\n# runs\n";
  const auto records = run_sweep(cfg, &log);
  auto out = open_out(cfg.output);
  write_csv(out, records_to_csv(records));
  for (const auto& r : records) {
    std::cout << to_string(r.mode) << " B=" << r.bandwidth_hz / 1e6 << "MHz Tf=" << r.frame_s * 1e3
              << "ms L=" << r.turbo_iterations << " Imu=" << r.bp_iterations
              << " Ialpha=" << r.gd_iterations << "  RMSE_p=" << r.rmse_p
              << " m  RMSE_v=" << r.rmse_v << " m/s  unconverged=" << r.unconverged << " failures=" << r.failures << "/" << r.runs
              << '\n';
  }
  std::cout << "wrote " << cfg.output << '\n';
  return 0;
}

int do_tracking(const CommonFlags& f, int epochs, double dt, const std::string& trace) {
  ExperimentConfig cfg = resolve(f);
  if (epochs > 0) cfg.epochs = epochs;
  if (dt > 0.0) cfg.tip.dt = dt;
  if (!trace.empty()) cfg.trace_path = trace;
  cfg.validate();
  auto log = open_out(log_path(f, cfg));
  std::vector<TrackingRow> all;
  for (double bw : cfg.bandwidths_hz) {
    log << "# bandwidth " << bw << '\n';
    const auto rows = run_tracking_demo(cfg, bw, &log);
    const TrackingSummary s = summarize_tracking(rows);
    std::cout << "B=" << bw / 1e6 << "MHz  median position error " << s.median_position_error
              << " m, median velocity angle error " << s.median_angle_error_deg
              << " deg, epochs with angle > 30 deg " << s.fraction_angle_over_30 * 100.0
              << "%, failed epochs " << s.failures << '\n';
    CsvTable t = tracking_to_csv(rows);
    t.header.insert(t.header.begin(), "bandwidth_hz");
    for (auto& row : t.rows) row.insert(row.begin(), format_double(bw));
    auto out = open_out(cfg.bandwidths_hz.size() == 1
                            ? cfg.output
                            : cfg.output + "." + format_double(bw / 1e6) + "MHz.csv");
    write_csv(out, t);
  }
  return 0;
}

int do_crlb(const CommonFlags& f) {
  ExperimentConfig cfg = resolve(f);
  CsvTable t;
  t.header = {"bandwidth_hz", "frame_s", "crlb_p", "crlb_v", "sqrt_crlb_p", "sqrt_crlb_v",
              "max_diag_rel_std_err", "singular"};
  for (double bw : cfg.bandwidths_hz)
    for (double tf : cfg.frames_s) {
      CrlbConfig cc;
      cc.samples = cfg.crlb_samples;
      cc.grid.bandwidth_hz = bw;
      cc.grid.frame_s = tf;
      cc.grid.carrier_hz = cfg.carrier_hz;
      cc.grid.c = cfg.c;
      cc.swarm = cfg.swarm;
      const FisherMatrix fm = fisher_matrix(cc, cfg.seed);
      const CrlbResult r = joint_crlb(fm.matrix);
      t.rows.push_back({format_double(bw), format_double(tf), format_double(r.position),
                        format_double(r.velocity), format_double(std::sqrt(r.position)),
                        format_double(std::sqrt(r.velocity)),
                        format_double(fm.diag_rel_std_err.maxCoeff()), r.singular ? "1" : "0"});
      std::cout << "B=" << bw / 1e6 << "MHz Tf=" << tf * 1e3 << "ms  sqrt(CRLB_p)="
                << std::sqrt(r.position) << " m  sqrt(CRLB_v)=" << std::sqrt(r.velocity)
                << " m/s\n";
    }
  auto out = open_out(cfg.output);
  write_csv(out, t);
  return 0;
}

int do_oracles(std::uint64_t seed) {
  bool ok = true;
  for (const auto& o : run_oracle_checks(seed)) {
    std::cout << (o.passed ? "PASS " : "FAIL ") << o.name << ": " << o.detail << '\n';
    ok = ok && o.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV swarm localization from delay-Doppler channel lists"};
  app.require_subcommand(1);

  CommonFlags cold_flags, track_flags, crlb_flags, sweep_flags;

  auto* cold = app.add_subcommand("cold-start", "BP + TIP cold-start Monte-Carlo sweep");
  add_common(cold, cold_flags);
  bool with_ga = false;
  cold->add_flag("--with-ga", with_ga, "Also run the genie-aided reference");

  auto* track = app.add_subcommand("tracking", "Tracking demo on Lissajous or trace trajectories");
  add_common(track, track_flags);
  int epochs = 0;
  double dt = 0.0;
  std::string trace;
  track->add_option("--epochs", epochs, "Number of epochs");
  track->add_option("--dt", dt, "Epoch spacing in s");
  track->add_option("--trace", trace, "Trajectory trace file (t,id,x,y,z rows)");

  auto* crlb = app.add_subcommand("crlb", "Joint position/velocity CRLB over the grid sweep");
  add_common(crlb, crlb_flags);

  auto* sweep = app.add_subcommand("sweep", "Config-driven sweep over all listed modes");
  add_common(sweep, sweep_flags);
  std::vector<std::string> modes;
  sweep->add_option("--mode", modes, "cold_start | genie_aided | tracking (list)");

  auto* oracle = app.add_subcommand("oracle-check", "Finite-difference and exhaustive-search checks");
  std::uint64_t oracle_seed = 1;
  oracle->add_option("--seed", oracle_seed, "Seed");

  auto* sim = app.add_subcommand("simulate", "Write the channel lists of one random swarm");
  int sim_n = 8;
  double sim_bw = 30.0;
  std::uint64_t sim_seed = 1;
  std::string sim_noise = "quantized", sim_out, sim_truth;
  sim->add_option("-n,--uavs", sim_n, "Swarm size");
  sim->add_option("-B,--bandwidth-mhz", sim_bw, "Bandwidth in MHz");
  sim->add_option("--seed", sim_seed, "Scenario seed");
  sim->add_option("--noise", sim_noise, "quantized | gaussian | noiseless");
  sim->add_option("-o,--output", sim_out, "Measurement file")->required();
  sim->add_option("--truth", sim_truth, "Also write true positions and velocities as CSV");

  auto* assign = app.add_subcommand("assign", "Run BP on a measurement file and report map errors");
  std::string assign_in, marg_out;
  int assign_iters = 2;
  bool assign_no_doppler = false;
  assign->add_option("input", assign_in, "Measurement file")->required();
  assign->add_option("--bp-iterations", assign_iters, "I_mu");
  assign->add_flag("--no-doppler-checks", assign_no_doppler, "Use delay check nodes only");
  assign->add_option("--marginals", marg_out, "Dump beliefs to this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cold) {
      std::vector<std::string> m{"cold_start"};
      if (with_ga) m.push_back("genie_aided");
      return do_sweep(cold_flags, m);
    }
    if (*track) return do_tracking(track_flags, epochs, dt, trace);
    if (*crlb) return do_crlb(crlb_flags);
    if (*sweep) return do_sweep(sweep_flags, modes);
    if (*oracle) return do_oracles(oracle_seed);
    if (*sim) {
      RandomSwarmParams p;
      p.n = sim_n;
      const SwarmState s = sample_random_swarm(p, sim_seed);
      OtfsGrid g;
      g.bandwidth_hz = sim_bw * 1e6;
      save_measurements(sim_out, build_measurements(s, g, noise_model_from_string(sim_noise), sim_seed));
      if (!sim_truth.empty()) {
        CsvTable t;
        t.header = {"uav", "anchor", "px", "py", "pz", "vx", "vy", "vz"};
        for (const auto& u : s.uavs()) {
          t.rows.push_back({std::to_string(u.id), u.is_anchor ? "1" : "0",
                            format_double(u.position.x()), format_double(u.position.y()),
                            format_double(u.position.z()), format_double(u.velocity.x()),
                            format_double(u.velocity.y()), format_double(u.velocity.z())});
        }
        auto out = open_out(sim_truth);
        write_csv(out, t);
      }
      return 0;
    }
    if (*assign) {
      const MeasurementSet m = load_measurements(assign_in);
      BpConfig cfg;
      cfg.iterations = assign_iters;
      cfg.use_doppler_checks = !assign_no_doppler;
      const BpResult r = compute_marginals(m, cfg);
      const AssignmentMaps maps = estimate_maps(r.marginals);
      const std::size_t n = m.lists.swarm_size();
      std::cout << "map entries differing from the stored truth: "
                << maps.count_differences(m.truth_maps) << " of " << n * (n - 1) * (n - 1)
                << "\nunderflow resets: " << r.diagnostics.underflow_resets << '\n';
      if (!marg_out.empty()) {
        auto out = open_out(marg_out);
        dump_marginals(out, r.marginals);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
