#pragma once

#include <cstdint>
#include <vector>

#include "swarmloc/assignment_bp.hpp"
#include "swarmloc/measurement.hpp"
#include "swarmloc/positioning.hpp"
#include "swarmloc/velocity.hpp"

namespace swarmloc {

enum class TipMode { cold_start, tracking, genie_aided };

std::string to_string(TipMode m);
TipMode tip_mode_from_string(const std::string& s);

struct TipConfig {
  int turbo_iterations = 1;  // L; the loop runs L + 1 GD solves
  BpConfig bp;
  GdConfig gd;
  TipMode mode = TipMode::cold_start;
  double dt = 1.0;                        // s, tracking epoch
  Vec3 prior_mean = Vec3::Constant(500.0);
  double prior_std = 1000.0 / std::sqrt(12.0);
  double tracking_restart_std = 10.0;     // m, spread of restarts around the forecast

  void validate() const;
};

/// Channel lists reordered by reflector identity.
struct OrderedObservations {
  OrderedDistances distance;  // k not in {i, j}
  TripleTable velocity;       // k != i, LoS at k == j
};

/// delta(i, j, k) = d[i, j, maps(i, j, k)] and likewise for velocities.
/// Throws ConfigError on a non-bijective map.
OrderedObservations apply_maps(const ChannelLists& lists, const AssignmentMaps& maps);

/// Maps implied by tentative positions: per pair, the RED distances
/// (0 for k == j) sorted ascending, ties to the lower reflector id.
AssignmentMaps compute_maps(const std::vector<Vec3>& positions);

struct TipIteration {
  double residual = 0.0;
  std::size_t map_changes = 0;  // entries changed by compute_maps after this iteration
  int gd_iterations = 0;
};

struct EstimationResult {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  double residual = 0.0;
  AssignmentMaps maps;          // maps of the final turbo iteration
  AssignmentMaps initial_maps;  // BP output, prior-implied maps, or truth
  std::vector<TipIteration> iterations;  // of the reported attempt
  bool failed = false;                   // no attempt reached beta * E_b
  int attempts = 0;
  int total_gd_iterations = 0;
  bool velocity_rank_deficient = false;
  BpDiagnostics bp;
};

/// BP maps and a random start, then L turbo iterations of compute_maps and
/// warm-started GD. The whole loop is rerun from a new draw until the final
/// residual is at most beta * E_b or the restart budget is spent.
EstimationResult run_cold_start(const MeasurementSet& meas, const Anchors& anchors,
                                const TipConfig& cfg, std::uint64_t seed);

struct TrackingResult {
  EstimationResult estimate;
  std::vector<Vec3> forecast;  // p + dt v, the prior for the next epoch
};

/// Same loop seeded by compute_maps(prior) and GD started at the prior; BP
/// is skipped.
TrackingResult run_tracking_step(const MeasurementSet& meas, const std::vector<Vec3>& prior,
                                 const Anchors& anchors, const TipConfig& cfg,
                                 std::uint64_t seed);

/// True maps, GD with restarts and least-squares velocities.
EstimationResult run_genie_aided(const MeasurementSet& meas, const Anchors& anchors,
                                 const TipConfig& cfg, std::uint64_t seed);

}  // namespace swarmloc
