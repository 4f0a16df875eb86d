#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "swarmloc/geometry.hpp"
#include "swarmloc/measurement.hpp"

namespace swarmloc {

/// Dense table indexed by an ordered UAV triple (i, j, k).
class TripleTable {
 public:
  TripleTable() = default;
  explicit TripleTable(std::size_t n) : n_(n), v_(n * n * n, 0.0) {}

  std::size_t swarm_size() const { return n_; }
  double& at(std::size_t i, std::size_t j, std::size_t k) { return v_[(i * n_ + j) * n_ + k]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return v_[(i * n_ + j) * n_ + k];
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> v_;
};

/// Reflected-path distances delta(i, j, k) after the maps were applied.
using OrderedDistances = TripleTable;

/// Stacked positions t = [t_0; t_1; ...], 3 entries per UAV.
using Stacked = Eigen::VectorXd;

Stacked stack(const std::vector<Vec3>& points);
std::vector<Vec3> unstack(const Stacked& t);

/// Which UAVs are anchors and their known state. `positions` and
/// `velocities` have one entry per UAV; entries of non-anchors are ignored.
/// Empty `velocities` means the anchors hover.
struct Anchors {
  std::vector<bool> mask;
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;

  static Anchors from_swarm(const SwarmState& swarm);
  std::size_t size() const { return mask.size(); }
  std::size_t count() const;
  std::size_t free_count() const { return size() - count(); }
};

enum class StepRule { constant, barzilai_borwein };

struct GdConfig {
  double epsilon = 1e-4;   // relative decrease that stops the descent
  int max_iterations = 100;
  double beta = 2.0;       // acceptance threshold is beta * E_b
  int max_restarts = 20;   // extra attempts after the first one
  StepRule step_rule = StepRule::barzilai_borwein;
  double gamma0 = 1e-2;    // first step, and every step under StepRule::constant
  double gamma_min = 1e-8;
  double gamma_max = 1e3;

  void validate() const;
};

/// E(t): sum over i, j != i, k not in {i, j} of (delta - theta(t))^2.
double square_error(const Stacked& t, const OrderedDistances& obs);

/// dE/dt with the rows of anchors set to zero. An empty mask clamps nothing.
Stacked gradient(const Stacked& t, const OrderedDistances& obs,
                 const std::vector<bool>& anchor_mask = {});

/// Expected square error at the truth under uniform quantization:
/// N(N-1)(N-2) (c/B)^2 / 12.
double residual_bound(std::size_t n, const OtfsGrid& grid);

struct GdResult {
  Stacked positions;
  double error = 0.0;
  double initial_error = 0.0;
  int iterations = 0;
};

/// Gradient descent from t0. Anchor rows of t0 are overwritten with the
/// anchor positions and never move. Stops when |dE|/E < epsilon and E did
/// not grow over the last 3 iterations, when E reaches 0, or after
/// max_iterations. Writes "iteration error step" rows to `trace` if given.
/// Throws NumericalError on a non-finite error or gradient.
GdResult gd_minimize(const OrderedDistances& obs, const Stacked& t0, const Anchors& anchors,
                     const GdConfig& cfg, std::ostream* trace = nullptr);

/// Gaussian draw for tentative positions: non-anchor component s of UAV u is
/// N(mean[u][s], std^2); anchors take their known positions.
struct InitDistribution {
  std::vector<Vec3> mean;
  double std = 1000.0 / std::sqrt(12.0);

  static InitDistribution uniform_prior(std::size_t n, const Vec3& mean, double std);
  Stacked draw(const Anchors& anchors, Rng& rng) const;
};

struct SolveResult {
  GdResult best;        // accepted result, or lowest-error attempt on failure
  bool accepted = false;
  int attempts = 0;
  int total_iterations = 0;
  double threshold = 0.0;
};

/// Runs gd_minimize from `init` (if non-empty) or from a fresh draw, then
/// from new draws until E <= threshold or max_restarts extra attempts ran.
SolveResult solve_with_restarts(const OrderedDistances& obs, const Anchors& anchors,
                                const GdConfig& cfg, double threshold, const Stacked& init,
                                const InitDistribution& draws, Rng& rng);

}  // namespace swarmloc
