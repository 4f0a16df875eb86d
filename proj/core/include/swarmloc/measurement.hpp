#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "swarmloc/geometry.hpp"

namespace swarmloc {

inline constexpr double kSpeedOfLight = 299792458.0;

/// Delay-Doppler grid of the OTFS link. Only the two resolutions matter here:
/// distance step c/B and radial velocity step c/(f_c T_f).
struct OtfsGrid {
  double bandwidth_hz = 30e6;
  double frame_s = 20e-3;
  double carrier_hz = 5e9;
  double c = kSpeedOfLight;

  double distance_step() const { return c / bandwidth_hz; }
  double velocity_step() const { return c / (carrier_hz * frame_s); }
  void validate() const;
};

/// How measured values deviate from the geometric truth.
///  - quantized: rounded to the delay/Doppler grid (the physical model)
///  - gaussian: additive zero-mean Gaussian noise with the variance of the
///    uniform quantization error (used to compare against the CRLB)
///  - noiseless: exact values, for oracle tests only
enum class NoiseModel { quantized, gaussian, noiseless };

std::string to_string(NoiseModel m);
NoiseModel noise_model_from_string(const std::string& s);

/// Relative echo distance |pj-pk| + |pk-pi| - |pi-pj|. Throws DomainError
/// when two of the points coincide.
double red_distance(const Vec3& p_i, const Vec3& p_j, const Vec3& p_k);

/// Rate of change of the path j -> k -> i length. For k == j this is the
/// direct-path rate (vj - vi) . u_{j,i}. Throws DomainError on coincident
/// positions.
double radial_velocity(const SwarmState& swarm, std::size_t i, std::size_t j, std::size_t k);
double radial_velocity(const std::vector<Vec3>& p, const std::vector<Vec3>& v, std::size_t i,
                       std::size_t j, std::size_t k);

/// Nearest multiple of `step`, ties away from zero.
double quantize(double value, double step);

/// Sorted delay/velocity profiles for every ordered pair (i, j), i != j.
/// Entry m of pair (i, j) is a (distance, velocity) pair; lists hold N-1
/// entries and distances are nondecreasing.
class ChannelLists {
 public:
  ChannelLists() = default;
  explicit ChannelLists(std::size_t n);

  std::size_t swarm_size() const { return n_; }
  std::size_t list_size() const { return n_ == 0 ? 0 : n_ - 1; }

  double& distance(std::size_t i, std::size_t j, std::size_t m) { return d_[offset(i, j) + m]; }
  double distance(std::size_t i, std::size_t j, std::size_t m) const {
    return d_[offset(i, j) + m];
  }
  double& velocity(std::size_t i, std::size_t j, std::size_t m) { return v_[offset(i, j) + m]; }
  double velocity(std::size_t i, std::size_t j, std::size_t m) const {
    return v_[offset(i, j) + m];
  }

  /// Relabels UAV u as perm[u]; the list of pair (i, j) becomes the list of
  /// pair (perm[i], perm[j]).
  ChannelLists relabeled(const std::vector<std::size_t>& perm) const;

 private:
  std::size_t offset(std::size_t i, std::size_t j) const { return (i * n_ + j) * (n_ - 1); }

  std::size_t n_ = 0;
  std::vector<double> d_;
  std::vector<double> v_;
};

/// Per-pair bijections k -> list index (0-based; index 0 is the LoS slot).
/// at(i, j, i) is unused and holds -1.
class AssignmentMaps {
 public:
  AssignmentMaps() = default;
  explicit AssignmentMaps(std::size_t n);

  std::size_t swarm_size() const { return n_; }

  int& at(std::size_t i, std::size_t j, std::size_t k) { return idx_[(i * n_ + j) * n_ + k]; }
  int at(std::size_t i, std::size_t j, std::size_t k) const {
    return idx_[(i * n_ + j) * n_ + k];
  }

  bool is_bijective(std::size_t i, std::size_t j) const;
  bool is_bijective() const;

  /// Number of (i, j, k) entries that differ from `other`.
  std::size_t count_differences(const AssignmentMaps& other) const;

  bool operator==(const AssignmentMaps& other) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<int> idx_;
};

struct MeasurementSet {
  ChannelLists lists;
  AssignmentMaps truth_maps;
  OtfsGrid grid;
  NoiseModel noise = NoiseModel::quantized;

  /// Grid whose steps set the likelihood kernels. Equal to `grid` except in
  /// the noiseless model, where both steps shrink by kNoiselessKernelScale.
  OtfsGrid likelihood_grid() const;
};

inline constexpr double kNoiselessKernelScale = 1e-6;

/// Builds the sorted channel lists of every ordered pair. Entries are sorted
/// by distance with ties going to the lower reflector id, so a reflector
/// whose quantized distance is 0 can take index 0 ahead of the LoS path. In the gaussian model the
/// LoS entry stays at index 0 and the noisy reflected entries are sorted
/// after it. `seed` only matters for the gaussian model.
MeasurementSet build_measurements(const SwarmState& swarm, const OtfsGrid& grid,
                                  NoiseModel noise = NoiseModel::quantized,
                                  std::uint64_t seed = 0);

/// Plain-text serialization, one block per ordered pair:
///
///   swarmloc-measurements 1
///   n <N>
///   grid <B> <T_f> <f_c> <c>
///   noise <quantized|gaussian|noiseless>
///   pair <i> <j>
///   d <N-1 distances>
///   v <N-1 velocities>
///   map <N list indices, -1 at k == i>
///   end
///
/// UAV ids are 0-based. Values are written with 17 significant digits.
void write_measurements(std::ostream& out, const MeasurementSet& m);
MeasurementSet read_measurements(std::istream& in);
void save_measurements(const std::filesystem::path& path, const MeasurementSet& m);
MeasurementSet load_measurements(const std::filesystem::path& path);

}  // namespace swarmloc
