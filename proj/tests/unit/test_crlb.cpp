#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "generators.hpp"
#include "swarmloc/crlb.hpp"
#include "swarmloc/errors.hpp"
#include "swarmloc/velocity.hpp"

namespace swarmloc {
namespace {

using testing::for_all;
using testing::Gen;

CrlbConfig small_config(int n, int samples) {
  CrlbConfig cfg;
  cfg.samples = samples;
  cfg.swarm.n = n;
  cfg.grid.c = 3e8;
  return cfg;
}

TEST(CrlbConfig, NoiseStds) {
  CrlbConfig cfg = small_config(6, 1);
  cfg.grid.bandwidth_hz = 30e6;
  EXPECT_NEAR(cfg.sigma_eta(), 10.0 / std::sqrt(12.0), 1e-12);
  EXPECT_NEAR(cfg.sigma_zeta(), 3.0 / std::sqrt(12.0), 1e-12);
  cfg.samples = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(DeltaJacobian, MatchesFiniteDifferences) {
  for_all(1, 50, [](Gen& g) {
    const SwarmState s = g.swarm(7);
    const auto p = s.positions();
    const auto mask = s.anchor_mask();
    const std::size_t i = static_cast<std::size_t>(g.integer(0, 6));
    std::size_t j = static_cast<std::size_t>(g.integer(0, 6));
    while (j == i) j = static_cast<std::size_t>(g.integer(0, 6));
    std::size_t k = static_cast<std::size_t>(g.integer(0, 6));
    while (k == i || k == j) k = static_cast<std::size_t>(g.integer(0, 6));
    const Eigen::VectorXd jac = delta_position_jacobian(p, mask, i, j, k);
    ASSERT_EQ(jac.size(), 9);
    Eigen::VectorXd fd(9);
    const double h = 1e-4;
    for (std::size_t u = 4; u < 7; ++u)
      for (int a = 0; a < 3; ++a) {
        auto pp = p, pm = p;
        pp[u][a] += h;
        pm[u][a] -= h;
        fd[static_cast<Eigen::Index>(3 * (u - 4)) + a] =
            (red_distance(pp[i], pp[j], pp[k]) - red_distance(pm[i], pm[j], pm[k])) / (2 * h);
      }
    EXPECT_LE((jac - fd).norm(), 1e-5 * std::max(fd.norm(), 1.0));
  });
}

TEST(DeltaJacobian, AnchorsOnlyGiveZero) {
  Gen g(2);
  const SwarmState s = g.swarm(6);
  EXPECT_EQ(delta_position_jacobian(s.positions(), s.anchor_mask(), 0, 1, 2).norm(), 0.0);
}

TEST(DeltaJacobian, CollinearHandValues) {
  // i at 0, j at 1, k at 3 on the x axis, k beyond j.
  const std::vector<Vec3> p{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(3, 0, 0)};
  const Eigen::VectorXd jac = delta_position_jacobian(p, std::vector<bool>(3, false), 0, 1, 2);
  EXPECT_NEAR(jac.segment<3>(0).norm(), 0.0, 1e-15);
  EXPECT_NEAR((jac.segment<3>(3) - Vec3(-2, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((jac.segment<3>(6) - Vec3(2, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(OmegaJacobians, MatchFiniteDifferences) {
  for_all(3, 50, [](Gen& g) {
    const SwarmState s = g.swarm(7);
    const auto p = s.positions();
    const auto v = s.velocities();
    const auto mask = s.anchor_mask();
    const std::size_t i = static_cast<std::size_t>(g.integer(0, 6));
    std::size_t j = static_cast<std::size_t>(g.integer(0, 6));
    while (j == i) j = static_cast<std::size_t>(g.integer(0, 6));
    std::size_t k = static_cast<std::size_t>(g.integer(0, 6));
    while (k == i) k = static_cast<std::size_t>(g.integer(0, 6));
    const auto [dp, dv] = omega_jacobians(p, v, mask, i, j, k);
    Eigen::VectorXd fp(9), fv(9);
    const double h = 1e-4;
    for (std::size_t u = 4; u < 7; ++u)
      for (int a = 0; a < 3; ++a) {
        auto pp = p, pm = p, vp = v, vm = v;
        pp[u][a] += h;
        pm[u][a] -= h;
        vp[u][a] += h;
        vm[u][a] -= h;
        const auto c = static_cast<Eigen::Index>(3 * (u - 4)) + a;
        fp[c] = (radial_velocity(pp, v, i, j, k) - radial_velocity(pm, v, i, j, k)) / (2 * h);
        fv[c] = (radial_velocity(p, vp, i, j, k) - radial_velocity(p, vm, i, j, k)) / (2 * h);
      }
    EXPECT_LE((dp - fp).norm(), 1e-4 * std::max(fp.norm(), 1e-3));
    EXPECT_LE((dv - fv).norm(), 1e-4 * std::max(fv.norm(), 1.0));
  });
}

TEST(OmegaJacobians, VelocityPartEqualsDesignRow) {
  Gen g(4);
  const SwarmState s = g.swarm(6);
  const auto p = s.positions();
  const VelocityDesign d = build_design(p, s.anchor_mask());
  for (std::size_t r = 0; r < d.rows.size(); ++r) {
    const auto& t = d.rows[r];
    const auto [dp, dv] = omega_jacobians(p, s.velocities(), s.anchor_mask(), t[0], t[1], t[2]);
    EXPECT_EQ(dv, Eigen::VectorXd(d.matrix.row(static_cast<Eigen::Index>(r)).transpose()));
  }
}

TEST(OmegaJacobians, StillSwarmHasNoPositionSensitivity) {
  Gen g(5);
  const SwarmState s = g.swarm(6);
  const std::vector<Vec3> v(6, Vec3::Zero());
  for (std::size_t k : {1u, 3u}) {
    const auto [dp, dv] = omega_jacobians(s.positions(), v, s.anchor_mask(), 5, 3, k);
    EXPECT_EQ(dp.norm(), 0.0);
  }
}

// Sum of outer products of the per-observation Jacobians: the delay rows
// run over k not in {i, j}, the Doppler rows over k != i.
Eigen::MatrixXd information_by_outer_products(const SwarmState& s, double se, double sz) {
  const auto p = s.positions();
  const auto v = s.velocities();
  const auto mask = s.anchor_mask();
  const std::size_t n = s.size();
  const auto m = static_cast<Eigen::Index>(3 * (n - static_cast<std::size_t>(s.anchor_count())));
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        if (i == j || k == i) continue;
        if (k != j) {
          Eigen::VectorXd row = Eigen::VectorXd::Zero(2 * m);
          row.head(m) = delta_position_jacobian(p, mask, i, j, k);
          f += row * row.transpose() / (se * se);
        }
        const auto [dp, dv] = omega_jacobians(p, v, mask, i, j, k);
        Eigen::VectorXd row(2 * m);
        row << dp, dv;
        f += row * row.transpose() / (sz * sz);
      }
  return f;
}

TEST(MeasurementInformation, MatchesOuterProducts) {
  for_all(6, 5, [](Gen& g) {
    const SwarmState s = g.swarm(7);
    const Eigen::MatrixXd a = measurement_information(s.positions(), s.velocities(), s.anchor_mask(), 2.9, 0.87);
    const Eigen::MatrixXd b = information_by_outer_products(s, 2.9, 0.87);
    EXPECT_LE((a - b).norm(), 1e-9 * b.norm());
  });
}

TEST(FisherMatrix, SymmetricAndPositiveSemidefinite) {
  for_all(7, 20, [](Gen& g) {
    CrlbConfig cfg = small_config(g.integer(5, 8), 5);
    cfg.grid.bandwidth_hz = g.uniform(1e6, 300e6);
    const FisherMatrix f = fisher_matrix(cfg, g.bits());
    const Eigen::MatrixXd& F = f.matrix;
    EXPECT_EQ(F.rows(), static_cast<Eigen::Index>(6 * (cfg.swarm.n - 4)));
    EXPECT_LE((F - F.transpose()).norm(), 1e-12 * F.norm());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (F + F.transpose()));
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-8 * F.norm());
  });
}

TEST(FisherMatrix, PriorLoadingVanishesForWidePriors) {
  CrlbConfig cfg = small_config(6, 3);
  const FisherMatrix narrow = fisher_matrix(cfg, 8);
  const double cp = 1.0 / (cfg.swarm.pos_std * cfg.swarm.pos_std);
  const double cv = 1.0 / (cfg.swarm.vel_std * cfg.swarm.vel_std);
  Eigen::MatrixXd prior = Eigen::MatrixXd::Zero(12, 12);
  prior.diagonal().head(6).setConstant(cp);
  prior.diagonal().tail(6).setConstant(cv);
  // Same draws, so removing the loading must leave the measurement part.
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(12, 12);
  Rng master(8);
  for (int r = 0; r < 3; ++r) {
    const SwarmState s = sample_random_swarm(cfg.swarm, master());
    info += measurement_information(s.positions(), s.velocities(), s.anchor_mask(), cfg.sigma_eta(),
                                    cfg.sigma_zeta());
  }
  EXPECT_LE((narrow.matrix - prior - info / 3.0).norm(), 1e-9 * narrow.matrix.norm());
}

TEST(FisherMatrix, StandardErrorReported) {
  const FisherMatrix f = fisher_matrix(small_config(6, 20), 9);
  EXPECT_EQ(f.samples, 20);
  EXPECT_EQ(f.free_uavs, 2u);
  EXPECT_EQ(f.diag_rel_std_err.size(), 12);
  EXPECT_GT(f.diag_rel_std_err.minCoeff(), 0.0);
  EXPECT_LT(f.diag_rel_std_err.maxCoeff(), 1.0);
}

Eigen::VectorXd inverse_diagonal(const Eigen::MatrixXd& f) { return f.inverse().diagonal(); }

TEST(JointCrlb, BandwidthMonotonicity) {
  for_all(10, 5, [](Gen& g) {
    CrlbConfig cfg = small_config(7, 10);
    cfg.grid.bandwidth_hz = g.uniform(1e6, 100e6);
    const std::uint64_t seed = g.bits();
    const FisherMatrix a = fisher_matrix(cfg, seed);
    cfg.grid.bandwidth_hz *= 2;
    const FisherMatrix b = fisher_matrix(cfg, seed);
    const Eigen::VectorXd da = inverse_diagonal(a.matrix), db = inverse_diagonal(b.matrix);
    for (Eigen::Index c = 0; c < 9; ++c) EXPECT_LT(db[c], da[c]);
    EXPECT_LT(joint_crlb(b.matrix).position, joint_crlb(a.matrix).position);
  });
}

TEST(JointCrlb, FrameMonotonicity) {
  CrlbConfig cfg = small_config(7, 10);
  const FisherMatrix a = fisher_matrix(cfg, 11);
  cfg.grid.frame_s *= 2;
  const FisherMatrix b = fisher_matrix(cfg, 11);
  const Eigen::VectorXd da = inverse_diagonal(a.matrix), db = inverse_diagonal(b.matrix);
  for (Eigen::Index c = 9; c < 18; ++c) EXPECT_LE(db[c], da[c]);
}

TEST(JointCrlb, VelocityBoundBarelyDependsOnBandwidth) {
  CrlbConfig cfg = small_config(8, 50);
  cfg.grid.bandwidth_hz = 3e6;
  const double lo = joint_crlb(fisher_matrix(cfg, 12).matrix).velocity;
  cfg.grid.bandwidth_hz = 300e6;
  const double hi = joint_crlb(fisher_matrix(cfg, 12).matrix).velocity;
  EXPECT_LT(std::abs(lo - hi) / hi, 0.2);
}

TEST(JointCrlb, BlockDiagonal) {
  const double lambda = 4.0;
  const Eigen::MatrixXd f = lambda * Eigen::MatrixXd::Identity(12, 12);
  const CrlbResult r = joint_crlb(f);
  EXPECT_DOUBLE_EQ(r.position, 1.0 / lambda);
  EXPECT_DOUBLE_EQ(r.velocity, 1.0 / lambda);
  EXPECT_FALSE(r.singular);
}

TEST(JointCrlb, SingularIsFlagged) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Identity(6, 6);
  f(2, 2) = 0.0;
  EXPECT_TRUE(joint_crlb(f).singular);
  EXPECT_THROW(joint_crlb(Eigen::MatrixXd::Identity(5, 5)), ConfigError);
}

}  // namespace
}  // namespace swarmloc
