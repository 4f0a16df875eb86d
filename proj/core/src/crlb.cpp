#include "swarmloc/crlb.hpp"

#include <cmath>

#include <Eigen/QR>

#include "swarmloc/errors.hpp"

namespace swarmloc {

double CrlbConfig::sigma_eta() const { return grid.distance_step() / std::sqrt(12.0); }
double CrlbConfig::sigma_zeta() const { return grid.velocity_step() / std::sqrt(12.0); }

void CrlbConfig::validate() const {
  if (samples < 1) throw ConfigError("CRLB needs at least one Monte-Carlo sample");
  grid.validate();
  if (!(swarm.pos_std > 0.0) || !(swarm.vel_std > 0.0)) {
    throw ConfigError("prior standard deviations must be positive");
  }
}

namespace {

struct Pair {
  Vec3 u;       // unit vector from b to a
  double r;
};

Pair link(const Vec3& a, const Vec3& b) {
  const Vec3 d = a - b;
  const double r = d.norm();
  if (r <= 1e-9) throw DomainError("coincident UAV positions in CRLB Jacobian");
  return {d / r, r};
}

// Projector onto the plane orthogonal to u, divided by r.
Eigen::Matrix3d versor_jacobian(const Pair& l) {
  return (Eigen::Matrix3d::Identity() - l.u * l.u.transpose()) / l.r;
}

std::vector<Eigen::Index> free_columns(const std::vector<bool>& mask) {
  std::vector<Eigen::Index> col(mask.size(), -1);
  Eigen::Index c = 0;
  for (std::size_t u = 0; u < mask.size(); ++u)
    if (!mask[u]) {
      col[u] = c;
      c += 3;
    }
  return col;
}

void add_block(Eigen::VectorXd& out, const std::vector<Eigen::Index>& col, std::size_t u,
               const Vec3& x) {
  if (col[u] >= 0) out.segment<3>(col[u]) += x;
}

Eigen::Index free_size(const std::vector<bool>& mask) {
  Eigen::Index c = 0;
  for (bool a : mask) c += a ? 0 : 3;
  return c;
}

}  // namespace

Eigen::VectorXd delta_position_jacobian(const std::vector<Vec3>& p,
                                        const std::vector<bool>& anchor_mask, std::size_t i,
                                        std::size_t j, std::size_t k) {
  const auto col = free_columns(anchor_mask);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(free_size(anchor_mask));
  const Vec3 u_ij = link(p[i], p[j]).u;
  const Vec3 u_ik = link(p[i], p[k]).u;
  const Vec3 u_jk = link(p[j], p[k]).u;
  add_block(g, col, i, u_ik - u_ij);
  add_block(g, col, j, u_jk + u_ij);
  add_block(g, col, k, -u_ik - u_jk);
  return g;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> omega_jacobians(const std::vector<Vec3>& p,
                                                            const std::vector<Vec3>& v,
                                                            const std::vector<bool>& anchor_mask,
                                                            std::size_t i, std::size_t j,
                                                            std::size_t k) {
  const auto col = free_columns(anchor_mask);
  const Eigen::Index size = free_size(anchor_mask);
  Eigen::VectorXd dp = Eigen::VectorXd::Zero(size);
  Eigen::VectorXd dv = Eigen::VectorXd::Zero(size);

  // Each leg a -> b contributes (v_a - v_b) . u_ab.
  auto leg = [&](std::size_t a, std::size_t b) {
    const Pair l = link(p[a], p[b]);
    const Vec3 w = versor_jacobian(l) * (v[a] - v[b]);
    add_block(dp, col, a, w);
    add_block(dp, col, b, -w);
    add_block(dv, col, a, l.u);
    add_block(dv, col, b, -l.u);
  };
  if (k == j) {
    leg(j, i);
  } else {
    leg(j, k);
    leg(k, i);
  }
  return {dp, dv};
}

Eigen::MatrixXd measurement_information(const std::vector<Vec3>& p, const std::vector<Vec3>& v,
                                        const std::vector<bool>& anchor_mask, double sigma_eta,
                                        double sigma_zeta) {
  const std::size_t n = p.size();
  const Eigen::Index m = free_size(anchor_mask);
  const double c_eta = 1.0 / (sigma_eta * sigma_eta);
  const double c_zeta = 1.0 / (sigma_zeta * sigma_zeta);
  Eigen::MatrixXd dpp = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd vpp = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd vpv = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd vvv = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        if (k != j) {
          const Eigen::VectorXd g = delta_position_jacobian(p, anchor_mask, i, j, k);
          dpp.selfadjointView<Eigen::Lower>().rankUpdate(g);
        }
        const auto [gp, gv] = omega_jacobians(p, v, anchor_mask, i, j, k);
        vpp.selfadjointView<Eigen::Lower>().rankUpdate(gp);
        vvv.selfadjointView<Eigen::Lower>().rankUpdate(gv);
        vpv.noalias() += gp * gv.transpose();
      }
    }
  Eigen::MatrixXd f(2 * m, 2 * m);
  f.topLeftCorner(m, m) = c_eta * Eigen::MatrixXd(dpp.selfadjointView<Eigen::Lower>()) +
                          c_zeta * Eigen::MatrixXd(vpp.selfadjointView<Eigen::Lower>());
  f.topRightCorner(m, m) = c_zeta * vpv;
  f.bottomLeftCorner(m, m) = c_zeta * vpv.transpose();
  f.bottomRightCorner(m, m) = c_zeta * Eigen::MatrixXd(vvv.selfadjointView<Eigen::Lower>());
  return f;
}

FisherMatrix fisher_matrix(const CrlbConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng master(seed);
  FisherMatrix out;
  out.samples = cfg.samples;

  Eigen::MatrixXd sum;
  Eigen::VectorXd diag_sum, diag_sq;
  for (int r = 0; r < cfg.samples; ++r) {
    const SwarmState s = sample_random_swarm(cfg.swarm, master());
    const Eigen::MatrixXd f = measurement_information(s.positions(), s.velocities(),
                                                      s.anchor_mask(), cfg.sigma_eta(),
                                                      cfg.sigma_zeta());
    if (r == 0) {
      sum = Eigen::MatrixXd::Zero(f.rows(), f.cols());
      diag_sum = Eigen::VectorXd::Zero(f.rows());
      diag_sq = Eigen::VectorXd::Zero(f.rows());
    }
    sum += f;
    diag_sum += f.diagonal();
    diag_sq += f.diagonal().cwiseAbs2();
  }
  const double R = cfg.samples;
  const Eigen::Index m = sum.rows() / 2;
  out.free_uavs = static_cast<std::size_t>(m / 3);
  out.matrix = sum / R;
  out.matrix.diagonal().head(m).array() += 1.0 / (cfg.swarm.pos_std * cfg.swarm.pos_std);
  out.matrix.diagonal().tail(m).array() += 1.0 / (cfg.swarm.vel_std * cfg.swarm.vel_std);

  const Eigen::VectorXd mean = diag_sum / R;
  Eigen::VectorXd var = (diag_sq / R - mean.cwiseAbs2()).cwiseMax(0.0);
  if (cfg.samples > 1) var *= R / (R - 1.0);
  out.diag_rel_std_err = (var / R).cwiseSqrt().cwiseQuotient(mean.cwiseMax(1e-300));
  return out;
}

CrlbResult joint_crlb(const Eigen::MatrixXd& fisher) {
  if (fisher.rows() != fisher.cols() || fisher.rows() % 6 != 0) {
    throw ConfigError("Fisher matrix must be square with 6 rows per free UAV");
  }
  CrlbResult out;
  const Eigen::Index m = fisher.rows() / 2;
  if (m == 0) return out;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(fisher);
  out.singular = cod.rank() < fisher.rows();
  const Eigen::MatrixXd inv = cod.pseudoInverse();
  out.position = inv.diagonal().head(m).mean();
  out.velocity = inv.diagonal().tail(m).mean();
  return out;
}

}  // namespace swarmloc
