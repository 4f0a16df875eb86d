#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "swarmloc/geometry.hpp"
#include "swarmloc/positioning.hpp"

namespace swarmloc {

/// Linear model omega = U v restricted to the non-anchor velocities. One row
/// per ordered triple (i, j != i, k != i), k == j included.
struct VelocityDesign {
  Eigen::MatrixXd matrix;         // rows x 3 * free UAVs
  Eigen::MatrixXd anchor_matrix;  // rows x 3 * anchors, for the known anchor velocities
  std::vector<std::array<std::size_t, 3>> rows;
  std::vector<std::size_t> free_uavs;    // column block b belongs to UAV free_uavs[b]
  std::vector<std::size_t> anchor_uavs;  // same for anchor_matrix
  std::size_t swarm_size = 0;
};

/// Coefficients of omega(i, j, k) on (v_i, v_j, v_k):
/// -u_ki, u_jk, u_ki - u_jk; for k == j: -u_ji, u_ji.
VelocityDesign build_design(const std::vector<Vec3>& positions, const std::vector<bool>& anchor_mask);

struct VelocityEstimate {
  std::vector<Vec3> velocities;  // every UAV; anchors carry their known velocity
  Eigen::Index rank = 0;
  bool rank_deficient = false;
};

/// Least-squares fit of the free velocities to the ordered observations
/// `omega(i, j, k)`. `anchor_velocities` may be empty (all zero). A rank
/// deficient design yields the minimum-norm solution with the flag set.
VelocityEstimate estimate_velocities(const VelocityDesign& design, const TripleTable& omega,
                                     const std::vector<Vec3>& anchor_velocities = {});

}  // namespace swarmloc
