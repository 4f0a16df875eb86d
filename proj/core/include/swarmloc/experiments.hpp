#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "swarmloc/crlb.hpp"
#include "swarmloc/csv.hpp"
#include "swarmloc/geometry.hpp"
#include "swarmloc/measurement.hpp"
#include "swarmloc/tip.hpp"

namespace swarmloc {

/// One run's estimate next to the truth. Anchors are left out of the metrics.
struct RunSample {
  std::vector<Vec3> estimate;
  std::vector<Vec3> truth;
  std::vector<bool> anchor_mask;
};

/// sqrt( sum over free UAVs and runs of |estimate - truth|^2 / (3 Nbar R) ).
/// Returns 0 for an empty set.
double rmse(const std::vector<RunSample>& runs);
inline double rmse_position(const std::vector<RunSample>& runs) { return rmse(runs); }
inline double rmse_velocity(const std::vector<RunSample>& runs) { return rmse(runs); }

struct ExperimentConfig {
  RandomSwarmParams swarm;                       // scenario prior and anchors
  std::vector<double> bandwidths_hz{30e6};
  std::vector<double> frames_s{20e-3};
  double carrier_hz = 5e9;
  double c = kSpeedOfLight;
  std::vector<int> turbo_iterations{1};          // L
  std::vector<int> bp_iterations{2};             // I_mu
  std::vector<int> gd_iterations{100};           // I_alpha
  std::vector<TipMode> modes{TipMode::cold_start};
  NoiseModel noise = NoiseModel::quantized;
  TipConfig tip;                                 // everything not swept
  bool with_crlb = false;
  int crlb_samples = 200;
  int runs = 100;                                // R per sweep point
  std::uint64_t seed = 1;
  int threads = 0;                               // 0: hardware concurrency

  // Tracking demo.
  int epochs = 50;
  double lissajous_amplitude = 1000.0;           // m, upper end of U[0, a]
  double lissajous_rate = 0.2;                   // rad/s, upper end of U[0, b]
  Vec3 lissajous_center = Vec3::Constant(500.0);
  std::string trace_path;                        // replaces the Lissajous swarm when set
  double trace_cube_side = 1000.0;

  std::string output = "results.csv";

  void validate() const;
};

struct RunRecord {
  double bandwidth_hz = 0.0;
  double frame_s = 0.0;
  int turbo_iterations = 0;
  int bp_iterations = 0;
  int gd_iterations = 0;
  TipMode mode = TipMode::cold_start;
  NoiseModel noise = NoiseModel::quantized;
  int runs = 0;
  int failures = 0;     // runs that aborted; left out of the RMSEs
  int unconverged = 0;  // runs whose best iterate missed beta * E_b; still in the RMSEs
  double rmse_p = 0.0;
  double rmse_v = 0.0;
  double mean_gd_iterations = 0.0;
  double map_error_rate = 0.0;  // fraction of initial map entries that differ from the truth
  double crlb_p = -1.0;         // m^2, -1 when not computed
  double crlb_v = -1.0;
  double wall_s = 0.0;
};

/// Seed of run r, shared by every sweep point so that points are compared
/// on identical scenarios.
std::uint64_t run_seed(std::uint64_t base, std::uint64_t run, std::uint64_t stream);

/// Calls body(index) for every index in [0, count) on up to `threads`
/// workers (0 means hardware concurrency). Rethrows the first exception.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

/// Every combination of the swept lists, R seeded runs each. Per-run lines
/// go to `log` when given. Runs that throw are counted as failures and left
/// out of the RMSEs; runs that exhaust the restart budget keep their best
/// iterate and are counted as unconverged.
std::vector<RunRecord> run_sweep(const ExperimentConfig& cfg, std::ostream* log = nullptr);

CsvTable records_to_csv(const std::vector<RunRecord>& records, bool with_wall_time = true);
std::vector<RunRecord> records_from_csv(const CsvTable& table);

struct TrackingRow {
  int epoch = 0;
  double time = 0.0;
  std::size_t uav = 0;
  bool anchor = false;
  bool failed = false;           // the epoch's estimate missed beta * E_b
  Vec3 truth_position = Vec3::Zero();
  Vec3 truth_velocity = Vec3::Zero();
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 forecast = Vec3::Zero();
  double position_error = 0.0;  // m
  double angle_error_deg = 0.0;  // NaN when the true velocity vanishes
};

struct TrackingSummary {
  double median_position_error = 0.0;
  double median_angle_error_deg = 0.0;
  double fraction_angle_over_30 = 0.0;
  int failures = 0;
};

/// TIP settings of one sweep point; the swept values override cfg.tip.
TipConfig point_tip_config(const ExperimentConfig& cfg, int turbo_iterations, int bp_iterations,
                           int gd_iterations, TipMode mode);

/// Epoch 0 is a cold start; later epochs are tracking steps fed by the
/// previous forecast. Trajectories are Lissajous curves unless a trace is
/// configured. Uses bandwidth `bandwidth_hz`, frames_s[0] and the first
/// entry of each TIP sweep list.
std::vector<TrackingRow> run_tracking_demo(const ExperimentConfig& cfg, double bandwidth_hz,
                                           std::ostream* log = nullptr);

/// Medians over the non-anchor rows.
TrackingSummary summarize_tracking(const std::vector<TrackingRow>& rows);

CsvTable tracking_to_csv(const std::vector<TrackingRow>& rows);

/// JSON config: every field of ExperimentConfig, all optional. Throws
/// ConfigError on unknown keys or wrong types.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

/// Name of the environment variable holding a default config path.
inline constexpr const char* kConfigEnvVar = "SWARMLOC_CONFIG";

struct OracleOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Finite-difference, identity and exhaustive-search cross checks on seeded
/// random instances.
std::vector<OracleOutcome> run_oracle_checks(std::uint64_t seed);

}  // namespace swarmloc
