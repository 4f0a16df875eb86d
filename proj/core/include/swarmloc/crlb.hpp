#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "swarmloc/geometry.hpp"
#include "swarmloc/measurement.hpp"

namespace swarmloc {

struct CrlbConfig {
  int samples = 200;        // Monte-Carlo draws of the swarm from its prior
  OtfsGrid grid;
  RandomSwarmParams swarm;  // prior of positions and velocities, anchors

  double sigma_eta() const;   // c / (sqrt(12) B)
  double sigma_zeta() const;  // c / (sqrt(12) f_c T_f)
  void validate() const;
};

/// d delta(i, j, k) / d p over the free (non-anchor) UAVs, 3 entries each.
Eigen::VectorXd delta_position_jacobian(const std::vector<Vec3>& p,
                                        const std::vector<bool>& anchor_mask, std::size_t i,
                                        std::size_t j, std::size_t k);

/// (d omega / d p, d omega / d v) over the free UAVs; k == j is the LoS path.
std::pair<Eigen::VectorXd, Eigen::VectorXd> omega_jacobians(const std::vector<Vec3>& p,
                                                            const std::vector<Vec3>& v,
                                                            const std::vector<bool>& anchor_mask,
                                                            std::size_t i, std::size_t j,
                                                            std::size_t k);

struct FisherMatrix {
  Eigen::MatrixXd matrix;            // 6 Nbar x 6 Nbar, positions first
  Eigen::VectorXd diag_rel_std_err;  // Monte-Carlo standard error of the diagonal over its mean
  std::size_t free_uavs = 0;
  int samples = 0;
};

/// Information of one swarm realization without the prior terms:
/// [[C_eta D + C_zeta Vpp, C_zeta Vpv], [C_zeta Vpv^T, C_zeta Vvv]].
Eigen::MatrixXd measurement_information(const std::vector<Vec3>& p, const std::vector<Vec3>& v,
                                        const std::vector<bool>& anchor_mask, double sigma_eta,
                                        double sigma_zeta);

/// Monte-Carlo average of measurement_information over prior draws plus the
/// prior loading 1/sigma_p^2 and 1/sigma_v^2 on the diagonal.
FisherMatrix fisher_matrix(const CrlbConfig& cfg, std::uint64_t seed);

struct CrlbResult {
  double position = 0.0;  // m^2, mean of the first 3 Nbar diagonal entries of F^-1
  double velocity = 0.0;  // (m/s)^2, mean of the last 3 Nbar
  bool singular = false;  // F was rank deficient and a pseudo-inverse was used
};

CrlbResult joint_crlb(const Eigen::MatrixXd& fisher);

}  // namespace swarmloc
