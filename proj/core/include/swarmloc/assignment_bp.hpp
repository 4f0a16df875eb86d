#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "swarmloc/measurement.hpp"

namespace swarmloc {

struct BpConfig {
  int iterations = 2;               // I_mu
  bool use_doppler_checks = true;   // add the quadruple Doppler factors
  double damping = 0.0;             // weight of the previous variable message
  double message_floor = 1e-12;     // lower clamp on normalized check messages

  void validate() const;
};

/// Beliefs pi[i, j, k, m] that reflector k occupies index m of list (i, j).
/// Row k == j is pinned to the LoS slot m = 0.
class MarginalTensor {
 public:
  MarginalTensor() = default;
  explicit MarginalTensor(std::size_t n);

  std::size_t swarm_size() const { return n_; }
  std::size_t list_size() const { return n_ - 1; }

  double& at(std::size_t i, std::size_t j, std::size_t k, std::size_t m) {
    return p_[((i * n_ + j) * n_ + k) * (n_ - 1) + m];
  }
  double at(std::size_t i, std::size_t j, std::size_t k, std::size_t m) const {
    return p_[((i * n_ + j) * n_ + k) * (n_ - 1) + m];
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> p_;
};

/// Ordered UAV triple [i, j, k] naming the variable "index of reflector k in list (i, j)".
using Triple = std::array<std::size_t, 3>;

/// Quadruple check node. Delay checks on Q = [i, j, k, h] touch
/// [i,j,k], [i,j,h], [i,k,h], [j,h,k]; Doppler checks touch
/// [i,j,k], [i,j,h], [k,h,i], [k,h,j].
struct CheckNode {
  std::array<std::size_t, 4> quad;
  std::array<std::size_t, 4> vars;  // dense variable ids
  bool doppler = false;
};

/// Bipartite structure of the assignment factor graph for a swarm of n UAVs.
class FactorGraph {
 public:
  FactorGraph(std::size_t n, bool with_doppler);

  std::size_t swarm_size() const { return n_; }
  std::size_t variable_count() const { return triples_.size(); }
  const Triple& variable(std::size_t v) const { return triples_[v]; }
  std::size_t variable_id(std::size_t i, std::size_t j, std::size_t k) const {
    return lookup_[(i * n_ + j) * n_ + k];
  }
  const std::vector<CheckNode>& checks() const { return checks_; }

  /// Edges incident to variable v, as (check index, slot within the check).
  const std::vector<std::pair<std::size_t, std::size_t>>& edges_of(std::size_t v) const {
    return incident_[v];
  }

 private:
  std::size_t n_;
  std::vector<Triple> triples_;
  std::vector<std::size_t> lookup_;
  std::vector<CheckNode> checks_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> incident_;
};

struct BpDiagnostics {
  std::size_t underflow_resets = 0;  // messages that vanished and were reset to uniform
  std::size_t delay_checks = 0;
  std::size_t doppler_checks = 0;
  double max_normalization_error = 0.0;  // largest |sum - 1| over emitted messages
};

struct BpResult {
  MarginalTensor marginals;
  BpDiagnostics diagnostics;
};

/// Loopy belief propagation with a flooding schedule over the quadruple
/// check nodes. Messages live on the N-2 non-LoS list slots.
BpResult compute_marginals(const ChannelLists& lists, const OtfsGrid& grid, const BpConfig& cfg);
inline BpResult compute_marginals(const MeasurementSet& meas, const BpConfig& cfg) {
  return compute_marginals(meas.lists, meas.likelihood_grid(), cfg);
}

/// Greedy decoding: per pair repeatedly take the largest remaining entry of
/// the (k, m) belief matrix, ties broken by lowest (k, m).
AssignmentMaps estimate_maps(const MarginalTensor& marginals);

/// Sum over all delay checks of log g(z) evaluated at the given maps.
/// Returns -infinity when some residual falls outside the kernel support.
double assignment_log_score(const ChannelLists& lists, const OtfsGrid& grid,
                            const AssignmentMaps& maps);

/// Exact maximizer of assignment_log_score over all per-pair permutations of
/// the non-LoS slots (LoS pinned to slot 0). Branch and bound; refuses n > 5.
AssignmentMaps brute_force_maps(const ChannelLists& lists, const OtfsGrid& grid);

/// Writes beliefs as "i j k p_0 ... p_{N-2}" rows.
void dump_marginals(std::ostream& out, const MarginalTensor& marginals);

}  // namespace swarmloc
