#include "swarmloc/velocity.hpp"

#include <Eigen/QR>

#include "swarmloc/errors.hpp"

namespace swarmloc {

namespace {

Vec3 unit(const Vec3& a, const Vec3& b) {
  const Vec3 d = a - b;
  const double r = d.norm();
  if (r <= 1e-9) throw DomainError("coincident UAV positions in velocity design");
  return d / r;
}

}  // namespace

VelocityDesign build_design(const std::vector<Vec3>& p, const std::vector<bool>& anchor_mask) {
  const std::size_t n = p.size();
  if (anchor_mask.size() != n) throw ConfigError("anchor mask size differs from swarm size");

  VelocityDesign d;
  d.swarm_size = n;
  std::vector<Eigen::Index> column(n);
  for (std::size_t u = 0; u < n; ++u) {
    auto& list = anchor_mask[u] ? d.anchor_uavs : d.free_uavs;
    column[u] = 3 * static_cast<Eigen::Index>(list.size());
    list.push_back(u);
  }
  const auto rows = static_cast<Eigen::Index>(n * (n - 1) * (n - 1));
  d.matrix = Eigen::MatrixXd::Zero(rows, 3 * static_cast<Eigen::Index>(d.free_uavs.size()));
  d.anchor_matrix = Eigen::MatrixXd::Zero(rows, 3 * static_cast<Eigen::Index>(d.anchor_uavs.size()));
  d.rows.reserve(static_cast<std::size_t>(rows));

  Eigen::Index r = 0;
  auto put = [&](std::size_t u, const Vec3& coef) {
    auto& m = anchor_mask[u] ? d.anchor_matrix : d.matrix;
    m.block<1, 3>(r, column[u]) += coef.transpose();
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        if (k == j) {
          const Vec3 u_ji = unit(p[j], p[i]);
          put(j, u_ji);
          put(i, -u_ji);
        } else {
          const Vec3 u_jk = unit(p[j], p[k]);
          const Vec3 u_ki = unit(p[k], p[i]);
          put(j, u_jk);
          put(k, u_ki - u_jk);
          put(i, -u_ki);
        }
        d.rows.push_back({i, j, k});
        ++r;
      }
    }
  return d;
}

VelocityEstimate estimate_velocities(const VelocityDesign& design, const TripleTable& omega,
                                     const std::vector<Vec3>& anchor_velocities) {
  const std::size_t n = design.swarm_size;
  if (omega.swarm_size() != n) throw ConfigError("observation table size differs from design");
  if (!anchor_velocities.empty() && anchor_velocities.size() != n) {
    throw ConfigError("anchor velocity list must have one entry per UAV");
  }

  Eigen::VectorXd y(static_cast<Eigen::Index>(design.rows.size()));
  for (std::size_t r = 0; r < design.rows.size(); ++r) {
    const auto& [i, j, k] = design.rows[r];
    y[static_cast<Eigen::Index>(r)] = omega.at(i, j, k);
  }
  Eigen::VectorXd va = Eigen::VectorXd::Zero(design.anchor_matrix.cols());
  if (!anchor_velocities.empty()) {
    for (std::size_t b = 0; b < design.anchor_uavs.size(); ++b) {
      va.segment<3>(3 * static_cast<Eigen::Index>(b)) = anchor_velocities[design.anchor_uavs[b]];
    }
  }
  y -= design.anchor_matrix * va;

  VelocityEstimate out;
  out.velocities.assign(n, Vec3::Zero());
  for (std::size_t b = 0; b < design.anchor_uavs.size(); ++b) {
    out.velocities[design.anchor_uavs[b]] = va.segment<3>(3 * static_cast<Eigen::Index>(b));
  }
  if (design.matrix.cols() == 0) return out;

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design.matrix);
  out.rank = cod.rank();
  out.rank_deficient = out.rank < design.matrix.cols();
  const Eigen::VectorXd v = cod.solve(y);
  for (std::size_t b = 0; b < design.free_uavs.size(); ++b) {
    out.velocities[design.free_uavs[b]] = v.segment<3>(3 * static_cast<Eigen::Index>(b));
  }
  return out;
}

}  // namespace swarmloc
