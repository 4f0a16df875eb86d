#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace swarmloc {

using Vec3 = Eigen::Vector3d;

/// The one random engine type used across the library. Always passed in
/// explicitly, never held globally.
using Rng = std::mt19937_64;

struct UavState {
  int id = 0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  bool is_anchor = false;
};

/// Positions, velocities and anchor flags of a swarm. UAV ids are the
/// 0-based indices into `uavs()`.
class SwarmState {
 public:
  SwarmState() = default;
  explicit SwarmState(std::vector<UavState> uavs);

  std::size_t size() const { return uavs_.size(); }
  int anchor_count() const;
  const UavState& operator[](std::size_t i) const { return uavs_[i]; }
  const std::vector<UavState>& uavs() const { return uavs_; }

  std::vector<Vec3> positions() const;
  std::vector<Vec3> velocities() const;
  std::vector<bool> anchor_mask() const;

  /// True when every pair of UAVs is separated by more than `tol` meters.
  bool has_distinct_positions(double tol = 1e-9) const;

 private:
  std::vector<UavState> uavs_;
};

/// True when the points span 3D, i.e. at least 4 of them and not all on one plane.
bool non_coplanar(const std::vector<Vec3>& points);

/// Default anchor layout: origin plus 1000 m along each axis.
std::vector<Vec3> default_anchor_positions();

struct RandomSwarmParams {
  int n = 8;
  double pos_mean = 500.0;
  double pos_std = 1000.0 / std::sqrt(12.0);
  double vel_std = 10.0;
  std::vector<Vec3> anchor_positions = default_anchor_positions();
};

/// Anchors take ids 0..A-1 with the given positions and zero velocity. Every
/// other component is drawn i.i.d. Gaussian. Fewer than 4 anchors are
/// accepted (they leave a gauge freedom, useful in tests only). Throws
/// ConfigError on 4 or more coplanar anchors or n < number of anchors.
SwarmState sample_random_swarm(const RandomSwarmParams& params, std::uint64_t seed);

struct LissajousAxis {
  double amplitude = 0.0;  // m
  double rate = 0.0;       // rad/s
  double phase = 0.0;      // rad
};

/// Per-UAV 3D Lissajous trajectory p_s(t) = center_s + a_s sin(b_s t + phi_s).
struct LissajousParams {
  std::vector<std::array<LissajousAxis, 3>> axes;
  std::vector<Vec3> centers;
};

struct LissajousSample {
  Vec3 position;
  Vec3 velocity;
};

LissajousSample lissajous_state(const LissajousParams& params, std::size_t uav, double t);

/// Amplitudes from U[0, amplitude_scale], rates from U[0, max_rate],
/// phases from U[0, 2 pi]; every trajectory centered at `center`.
LissajousParams sample_lissajous(std::size_t n, double amplitude_scale, double max_rate,
                                 const Vec3& center, Rng& rng);

struct TraceSnapshot {
  double time = 0.0;
  std::vector<Vec3> positions;   // indexed by dense UAV index (sorted trace ids)
  std::vector<Vec3> velocities;  // finite-difference estimate between snapshots
};

/// Reads "t,id,x,y,z" rows, groups by time and applies one global similarity
/// map so that the bounding box of all points fits a cube of side
/// `cube_side` centered at `cube_center`. Lines starting with '#' and blank
/// lines are skipped. Throws ParseError on a malformed row and ConfigError
/// when fewer than `min_uavs` ids appear or a snapshot misses an id.
std::vector<TraceSnapshot> load_trace(const std::filesystem::path& path, double cube_side,
                                      const Vec3& cube_center, std::size_t min_uavs = 1);

/// Same as load_trace but reads from an in-memory string.
std::vector<TraceSnapshot> parse_trace(const std::string& text, double cube_side,
                                       const Vec3& cube_center, std::size_t min_uavs = 1);

}  // namespace swarmloc
