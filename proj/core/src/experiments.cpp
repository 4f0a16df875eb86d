#include "swarmloc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <set>
#include <thread>

#include "swarmloc/errors.hpp"

namespace swarmloc {

double rmse(const std::vector<RunSample>& runs) {
  double sum = 0.0;
  std::size_t terms = 0;
  for (const auto& r : runs) {
    for (std::size_t u = 0; u < r.truth.size(); ++u) {
      if (u < r.anchor_mask.size() && r.anchor_mask[u]) continue;
      sum += (r.estimate[u] - r.truth[u]).squaredNorm();
      terms += 3;
    }
  }
  return terms == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(terms));
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw ConfigError("runs must be at least 1");
  if (bandwidths_hz.empty() || frames_s.empty() || turbo_iterations.empty() ||
      bp_iterations.empty() || gd_iterations.empty() || modes.empty()) {
    throw ConfigError("sweep lists must be non-empty");
  }
  if (swarm.n < 4) throw ConfigError("swarm needs at least 4 UAVs");
  if (!non_coplanar(swarm.anchor_positions)) {
    throw ConfigError("experiments need at least 4 non-coplanar anchors");
  }
  for (double b : bandwidths_hz)
    if (!(b > 0.0)) throw ConfigError("bandwidths must be positive");
  for (double f : frames_s)
    if (!(f > 0.0)) throw ConfigError("frame durations must be positive");
  if (!(carrier_hz > 0.0) || !(c > 0.0)) throw ConfigError("carrier and c must be positive");
  for (int l : turbo_iterations)
    if (l < 0) throw ConfigError("turbo iterations must be non-negative");
  for (int i : bp_iterations)
    if (i < 1) throw ConfigError("BP iterations must be at least 1");
  for (int i : gd_iterations)
    if (i < 1) throw ConfigError("GD iterations must be at least 1");
  if (crlb_samples < 1) throw ConfigError("CRLB samples must be at least 1");
  if (epochs < 1) throw ConfigError("tracking needs at least one epoch");
  if (lissajous_amplitude < 0.0 || lissajous_rate < 0.0) {
    throw ConfigError("Lissajous ranges must be non-negative");
  }
  if (!(trace_cube_side > 0.0)) throw ConfigError("trace cube side must be positive");
  tip.validate();
}

std::uint64_t run_seed(std::uint64_t base, std::uint64_t run, std::uint64_t stream) {
  // splitmix64 finalizer over a mixed key
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (run + 1) + 0xbf58476d1ce4e5b9ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

TipConfig point_tip_config(const ExperimentConfig& cfg, int turbo_iterations, int bp_iterations,
                           int gd_iterations, TipMode mode) {
  TipConfig tip = cfg.tip;
  tip.turbo_iterations = turbo_iterations;
  tip.bp.iterations = bp_iterations;
  tip.gd.max_iterations = gd_iterations;
  tip.mode = mode;
  tip.prior_mean = Vec3::Constant(cfg.swarm.pos_mean);
  tip.prior_std = cfg.swarm.pos_std;
  return tip;
}

namespace {

OtfsGrid make_grid(const ExperimentConfig& cfg, double bandwidth, double frame) {
  OtfsGrid g;
  g.bandwidth_hz = bandwidth;
  g.frame_s = frame;
  g.carrier_hz = cfg.carrier_hz;
  g.c = cfg.c;
  return g;
}

struct RunOutcome {
  RunSample position;
  RunSample velocity;
  bool failed = false;     // aborted with an exception
  bool unconverged = false;
  std::string error;
  int gd_iterations = 0;
  std::size_t map_errors = 0;
  std::size_t map_entries = 0;
  int attempts = 0;
  double residual = 0.0;
};

RunOutcome one_run(const ExperimentConfig& cfg, const OtfsGrid& grid, const TipConfig& tip,
                   std::size_t r) {
  RunOutcome out;
  try {
    const SwarmState swarm = sample_random_swarm(cfg.swarm, run_seed(cfg.seed, r, 0));
    const MeasurementSet meas = build_measurements(swarm, grid, cfg.noise, run_seed(cfg.seed, r, 1));
    const Anchors anchors = Anchors::from_swarm(swarm);
    const std::uint64_t seed = run_seed(cfg.seed, r, 2);

    EstimationResult est;
    switch (tip.mode) {
      case TipMode::cold_start:
        est = run_cold_start(meas, anchors, tip, seed);
        break;
      case TipMode::genie_aided:
        est = run_genie_aided(meas, anchors, tip, seed);
        break;
      case TipMode::tracking: {
        // Prior: truth disturbed by the tracking restart spread.
        Rng rng(run_seed(cfg.seed, r, 3));
        std::normal_distribution<double> unit(0.0, tip.tracking_restart_std);
        auto prior = swarm.positions();
        for (std::size_t u = 0; u < prior.size(); ++u)
          if (!anchors.mask[u])
            for (int s = 0; s < 3; ++s) prior[u][s] += unit(rng);
        est = run_tracking_step(meas, prior, anchors, tip, seed).estimate;
        break;
      }
    }
    out.position = {est.positions, swarm.positions(), anchors.mask};
    out.velocity = {est.velocities, swarm.velocities(), anchors.mask};
    out.unconverged = est.failed;
    out.gd_iterations = est.total_gd_iterations;
    out.map_errors = est.initial_maps.count_differences(meas.truth_maps);
    const std::size_t n = swarm.size();
    out.map_entries = n * (n - 1) * (n - 1);
    out.attempts = est.attempts;
    out.residual = est.residual;
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

}  // namespace

std::vector<RunRecord> run_sweep(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  std::vector<RunRecord> records;
  std::map<std::pair<double, double>, CrlbResult> crlb_cache;

  for (double bw : cfg.bandwidths_hz)
    for (double tf : cfg.frames_s)
      for (TipMode mode : cfg.modes)
        for (int L : cfg.turbo_iterations)
          for (int imu : cfg.bp_iterations)
            for (int ia : cfg.gd_iterations) {
              const auto start = std::chrono::steady_clock::now();
              const OtfsGrid grid = make_grid(cfg, bw, tf);
              const TipConfig tip = point_tip_config(cfg, L, imu, ia, mode);
              std::vector<RunOutcome> outcomes(static_cast<std::size_t>(cfg.runs));
              parallel_for(outcomes.size(), cfg.threads,
                           [&](std::size_t r) { outcomes[r] = one_run(cfg, grid, tip, r); });

              RunRecord rec;
              rec.bandwidth_hz = bw;
              rec.frame_s = tf;
              rec.turbo_iterations = L;
              rec.bp_iterations = imu;
              rec.gd_iterations = ia;
              rec.mode = mode;
              rec.noise = cfg.noise;
              rec.runs = cfg.runs;
              std::vector<RunSample> pos, vel;
              double iters = 0.0;
              std::size_t map_err = 0, map_total = 0;
              for (std::size_t r = 0; r < outcomes.size(); ++r) {
                const auto& o = outcomes[r];
                if (log) {
                  *log << "B=" << bw << " Tf=" << tf << " mode=" << to_string(mode) << " L=" << L
                       << " Imu=" << imu << " Ialpha=" << ia << " run=" << r
                       << " failed=" << o.failed << " unconverged=" << o.unconverged
                       << " attempts=" << o.attempts
                       << " residual=" << o.residual << " map_errors=" << o.map_errors;
                  if (!o.error.empty()) *log << " error=\"" << o.error << '"';
                  *log << '\n';
                }
                iters += o.gd_iterations;
                map_err += o.map_errors;
                map_total += o.map_entries;
                if (o.failed) {
                  ++rec.failures;
                  continue;
                }
                if (o.unconverged) ++rec.unconverged;
                pos.push_back(o.position);
                vel.push_back(o.velocity);
              }
              rec.rmse_p = rmse_position(pos);
              rec.rmse_v = rmse_velocity(vel);
              rec.mean_gd_iterations = iters / static_cast<double>(cfg.runs);
              rec.map_error_rate =
                  map_total == 0 ? 0.0 : static_cast<double>(map_err) / static_cast<double>(map_total);
              if (cfg.with_crlb) {
                auto key = std::make_pair(bw, tf);
                auto it = crlb_cache.find(key);
                if (it == crlb_cache.end()) {
                  CrlbConfig cc;
                  cc.samples = cfg.crlb_samples;
                  cc.grid = grid;
                  cc.swarm = cfg.swarm;
                  it = crlb_cache.emplace(key, joint_crlb(fisher_matrix(cc, cfg.seed).matrix)).first;
                }
                rec.crlb_p = it->second.position;
                rec.crlb_v = it->second.velocity;
              }
              rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                               .count();
              records.push_back(rec);
            }
  return records;
}

namespace {

const std::vector<std::string> kRecordColumns = {
    "bandwidth_hz", "frame_s",  "mode",   "turbo_iterations", "bp_iterations",
    "gd_iterations", "noise",   "runs",   "failures",         "unconverged", "rmse_p",
    "rmse_v",        "mean_gd_iterations", "map_error_rate",  "crlb_p",
    "crlb_v",        "sqrt_crlb_p",        "sqrt_crlb_v"};

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + s + "'", line);
  }
}

int parse_int(const std::string& s, std::size_t line) {
  const double v = parse_double(s, line);
  if (v != std::floor(v)) throw ParseError("not an integer: '" + s + "'", line);
  return static_cast<int>(v);
}

}  // namespace

CsvTable records_to_csv(const std::vector<RunRecord>& records, bool with_wall_time) {
  CsvTable t;
  t.header = kRecordColumns;
  if (with_wall_time) t.header.push_back("wall_s");
  for (const auto& r : records) {
    const auto root = [](double x) { return x < 0.0 ? -1.0 : std::sqrt(x); };
    std::vector<std::string> row = {format_double(r.bandwidth_hz),
                                    format_double(r.frame_s),
                                    to_string(r.mode),
                                    std::to_string(r.turbo_iterations),
                                    std::to_string(r.bp_iterations),
                                    std::to_string(r.gd_iterations),
                                    to_string(r.noise),
                                    std::to_string(r.runs),
                                    std::to_string(r.failures),
                                    std::to_string(r.unconverged),
                                    format_double(r.rmse_p),
                                    format_double(r.rmse_v),
                                    format_double(r.mean_gd_iterations),
                                    format_double(r.map_error_rate),
                                    format_double(r.crlb_p),
                                    format_double(r.crlb_v),
                                    format_double(root(r.crlb_p)),
                                    format_double(root(r.crlb_v))};
    if (with_wall_time) row.push_back(format_double(r.wall_s));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<RunRecord> records_from_csv(const CsvTable& table) {
  std::vector<RunRecord> out;
  std::vector<std::size_t> col;
  for (const auto& name : kRecordColumns) col.push_back(table.column(name));
  std::size_t wall = table.header.size();
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (table.header[c] == "wall_s") wall = c;

  std::size_t line = 1;
  for (const auto& row : table.rows) {
    ++line;
    RunRecord r;
    r.bandwidth_hz = parse_double(row[col[0]], line);
    r.frame_s = parse_double(row[col[1]], line);
    try {
      r.mode = tip_mode_from_string(row[col[2]]);
      r.noise = noise_model_from_string(row[col[6]]);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line);
    }
    r.turbo_iterations = parse_int(row[col[3]], line);
    r.bp_iterations = parse_int(row[col[4]], line);
    r.gd_iterations = parse_int(row[col[5]], line);
    r.runs = parse_int(row[col[7]], line);
    r.failures = parse_int(row[col[8]], line);
    r.unconverged = parse_int(row[col[9]], line);
    r.rmse_p = parse_double(row[col[10]], line);
    r.rmse_v = parse_double(row[col[11]], line);
    r.mean_gd_iterations = parse_double(row[col[12]], line);
    r.map_error_rate = parse_double(row[col[13]], line);
    r.crlb_p = parse_double(row[col[14]], line);
    r.crlb_v = parse_double(row[col[15]], line);
    if (wall < table.header.size()) r.wall_s = parse_double(row[wall], line);
    out.push_back(r);
  }
  return out;
}

namespace {

double angle_deg(const Vec3& a, const Vec3& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (nb < 1e-9) return std::numeric_limits<double>::quiet_NaN();
  if (na < 1e-12) return 180.0;
  const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

struct Epoch {
  double time;
  SwarmState swarm;
};

std::vector<Epoch> lissajous_epochs(const ExperimentConfig& cfg) {
  const std::size_t n = static_cast<std::size_t>(cfg.swarm.n);
  const std::size_t a = cfg.swarm.anchor_positions.size();
  if (n < a) throw ConfigError("fewer UAVs than anchors");
  if (!non_coplanar(cfg.swarm.anchor_positions)) throw ConfigError("anchors are coplanar");
  Rng rng(run_seed(cfg.seed, 0, 10));
  const LissajousParams traj =
      sample_lissajous(n - a, cfg.lissajous_amplitude, cfg.lissajous_rate, cfg.lissajous_center, rng);
  std::vector<Epoch> out;
  for (int e = 0; e < cfg.epochs; ++e) {
    const double t = e * cfg.tip.dt;
    std::vector<UavState> uavs(n);
    for (std::size_t u = 0; u < n; ++u) {
      uavs[u].is_anchor = u < a;
      if (u < a) {
        uavs[u].position = cfg.swarm.anchor_positions[u];
      } else {
        const LissajousSample s = lissajous_state(traj, u - a, t);
        uavs[u].position = s.position;
        uavs[u].velocity = s.velocity;
      }
    }
    out.push_back({t, SwarmState(std::move(uavs))});
  }
  return out;
}

std::vector<Epoch> trace_epochs(const ExperimentConfig& cfg) {
  const std::size_t a = cfg.swarm.anchor_positions.size();
  const auto snaps =
      load_trace(cfg.trace_path, cfg.trace_cube_side, cfg.lissajous_center, std::max<std::size_t>(a + 1, 4));
  std::vector<Epoch> out;
  for (std::size_t e = 0; e < snaps.size() && static_cast<int>(e) < cfg.epochs; ++e) {
    const auto& s = snaps[e];
    std::vector<UavState> uavs(s.positions.size());
    for (std::size_t u = 0; u < uavs.size(); ++u) {
      uavs[u].position = s.positions[u];
      uavs[u].velocity = s.velocities[u];
      uavs[u].is_anchor = u < a;
    }
    out.push_back({s.time, SwarmState(std::move(uavs))});
  }
  return out;
}

}  // namespace

std::vector<TrackingRow> run_tracking_demo(const ExperimentConfig& cfg, double bandwidth_hz,
                                           std::ostream* log) {
  cfg.validate();
  const OtfsGrid grid = make_grid(cfg, bandwidth_hz, cfg.frames_s.front());
  const std::vector<Epoch> epochs = cfg.trace_path.empty() ? lissajous_epochs(cfg) : trace_epochs(cfg);
  TipConfig tip = point_tip_config(cfg, cfg.turbo_iterations.front(), cfg.bp_iterations.front(),
                                   cfg.gd_iterations.front(), TipMode::cold_start);

  std::vector<TrackingRow> rows;
  std::vector<Vec3> prior;
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    const SwarmState& swarm = epochs[e].swarm;
    const Anchors anchors = Anchors::from_swarm(swarm);
    const MeasurementSet meas = build_measurements(swarm, grid, cfg.noise, run_seed(cfg.seed, e, 11));
    const std::uint64_t seed = run_seed(cfg.seed, e, 12);
    if (e + 1 < epochs.size()) tip.dt = epochs[e + 1].time - epochs[e].time;
    if (!(tip.dt > 0.0)) throw ConfigError("epoch times must increase");

    EstimationResult est;
    std::vector<Vec3> forecast;
    if (e == 0) {
      tip.mode = TipMode::cold_start;
      est = run_cold_start(meas, anchors, tip, seed);
      forecast.resize(est.positions.size());
      for (std::size_t u = 0; u < forecast.size(); ++u)
        forecast[u] = est.positions[u] + tip.dt * est.velocities[u];
    } else {
      tip.mode = TipMode::tracking;
      TrackingResult tr = run_tracking_step(meas, prior, anchors, tip, seed);
      est = std::move(tr.estimate);
      forecast = std::move(tr.forecast);
    }
    if (log) {
      *log << "epoch=" << e << " t=" << epochs[e].time << " failed=" << est.failed
           << " attempts=" << est.attempts << " residual=" << est.residual
           << " map_errors=" << est.initial_maps.count_differences(meas.truth_maps) << '\n';
    }
    for (std::size_t u = 0; u < swarm.size(); ++u) {
      TrackingRow row;
      row.epoch = static_cast<int>(e);
      row.time = epochs[e].time;
      row.uav = u;
      row.anchor = swarm[u].is_anchor;
      row.failed = est.failed;
      row.truth_position = swarm[u].position;
      row.truth_velocity = swarm[u].velocity;
      row.position = est.positions[u];
      row.velocity = est.velocities[u];
      row.forecast = forecast[u];
      row.position_error = (row.position - row.truth_position).norm();
      row.angle_error_deg = angle_deg(row.velocity, row.truth_velocity);
      rows.push_back(row);
    }
    prior = std::move(forecast);
  }
  return rows;
}

namespace {

double median(std::vector<double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
  double m = x[mid];
  if (x.size() % 2 == 0) {
    m = (m + *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid))) / 2.0;
  }
  return m;
}

}  // namespace

TrackingSummary summarize_tracking(const std::vector<TrackingRow>& rows) {
  TrackingSummary s;
  std::vector<double> pos, ang;
  std::set<int> failed;
  std::size_t over = 0;
  for (const auto& r : rows) {
    if (r.failed) failed.insert(r.epoch);
    if (r.anchor) continue;
    pos.push_back(r.position_error);
    if (std::isnan(r.angle_error_deg)) continue;
    ang.push_back(r.angle_error_deg);
    if (r.angle_error_deg > 30.0) ++over;
  }
  s.median_position_error = median(pos);
  s.median_angle_error_deg = median(ang);
  s.fraction_angle_over_30 =
      ang.empty() ? 0.0 : static_cast<double>(over) / static_cast<double>(ang.size());
  s.failures = static_cast<int>(failed.size());
  return s;
}

CsvTable tracking_to_csv(const std::vector<TrackingRow>& rows) {
  CsvTable t;
  t.header = {"epoch", "time", "uav", "anchor", "failed"};
  for (const char* prefix : {"true_p", "true_v", "est_p", "est_v", "forecast_p"})
    for (const char* axis : {"x", "y", "z"}) t.header.push_back(std::string(prefix) + "_" + axis);
  t.header.push_back("position_error");
  t.header.push_back("angle_error_deg");
  for (const auto& r : rows) {
    std::vector<std::string> row = {std::to_string(r.epoch), format_double(r.time),
                                    std::to_string(r.uav), r.anchor ? "1" : "0",
                                    r.failed ? "1" : "0"};
    for (const Vec3* v : {&r.truth_position, &r.truth_velocity, &r.position, &r.velocity, &r.forecast})
      for (int s = 0; s < 3; ++s) row.push_back(format_double((*v)[s]));
    row.push_back(format_double(r.position_error));
    row.push_back(std::isnan(r.angle_error_deg) ? "nan" : format_double(r.angle_error_deg));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace swarmloc
