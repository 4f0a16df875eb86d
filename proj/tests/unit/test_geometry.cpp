#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "swarmloc/errors.hpp"
#include "swarmloc/geometry.hpp"

namespace swarmloc {
namespace {

using testing::for_all;
using testing::Gen;

TEST(RandomSwarm, DefaultAnchorsAccepted) {
  RandomSwarmParams p;
  const SwarmState s = sample_random_swarm(p, 7);
  ASSERT_EQ(s.size(), 8u);
  EXPECT_EQ(s.anchor_count(), 4);
  const auto anchors = default_anchor_positions();
  for (std::size_t a = 0; a < 4; ++a) {
    EXPECT_TRUE(s[a].is_anchor);
    EXPECT_EQ(s[a].position, anchors[a]);
    EXPECT_EQ(s[a].velocity, Vec3::Zero());
  }
  EXPECT_EQ(s[1].position, Vec3(1000, 0, 0));
}

TEST(RandomSwarm, CoplanarAnchorsRejected) {
  RandomSwarmParams p;
  p.anchor_positions = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
  EXPECT_THROW(sample_random_swarm(p, 1), ConfigError);
}

TEST(RandomSwarm, MoreAnchorsThanUavsRejected) {
  RandomSwarmParams p;
  p.n = 3;
  EXPECT_THROW(sample_random_swarm(p, 1), ConfigError);
}

TEST(RandomSwarm, ZeroSpreadPutsEveryoneAtTheMean) {
  RandomSwarmParams p;
  p.pos_std = 0.0;
  const SwarmState s = sample_random_swarm(p, 3);
  for (std::size_t u = 4; u < s.size(); ++u) EXPECT_EQ(s[u].position, Vec3::Constant(500.0));
}

TEST(RandomSwarm, SeedDeterminism) {
  RandomSwarmParams p;
  const SwarmState a = sample_random_swarm(p, 42);
  const SwarmState b = sample_random_swarm(p, 42);
  const SwarmState c = sample_random_swarm(p, 43);
  bool differs = false;
  for (std::size_t u = 0; u < a.size(); ++u) {
    EXPECT_EQ(a[u].position, b[u].position);
    EXPECT_EQ(a[u].velocity, b[u].velocity);
    differs = differs || a[u].position != c[u].position;
  }
  EXPECT_TRUE(differs);
}

TEST(NonCoplanar, Basics) {
  EXPECT_TRUE(non_coplanar(default_anchor_positions()));
  EXPECT_FALSE(non_coplanar({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}));
  EXPECT_FALSE(non_coplanar({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)}));
}

LissajousParams one_axis_set(double a, double b, double phi) {
  LissajousParams p;
  p.axes.push_back({LissajousAxis{a, b, phi}, LissajousAxis{a, b, phi}, LissajousAxis{a, b, phi}});
  return p;
}

TEST(Lissajous, SineAtZero) {
  const auto s = lissajous_state(one_axis_set(1, 1, 0), 0, 0.0);
  EXPECT_EQ(s.position, Vec3::Zero());
  EXPECT_EQ(s.velocity, Vec3::Ones());
}

TEST(Lissajous, QuarterPhase) {
  const auto s = lissajous_state(one_axis_set(2.5, 0.3, std::numbers::pi / 2), 0, 0.0);
  for (int c = 0; c < 3; ++c) {
    EXPECT_DOUBLE_EQ(s.position[c], 2.5);
    EXPECT_NEAR(s.velocity[c], 0.0, 1e-15);
  }
}

TEST(Lissajous, VelocityIsDerivativeOfPosition) {
  for_all(11, 100, [](Gen& g) {
    const auto p = sample_lissajous(3, 1000.0, 0.2, Vec3::Constant(500), g.rng());
    const double t = g.uniform(0, 100);
    const double h = 1e-4;
    for (std::size_t u = 0; u < 3; ++u) {
      const Vec3 fd =
          (lissajous_state(p, u, t + h).position - lissajous_state(p, u, t - h).position) / (2 * h);
      const Vec3 v = lissajous_state(p, u, t).velocity;
      EXPECT_LE((fd - v).norm(), 1e-5 * std::max(v.norm(), 1.0));
    }
  });
}

TEST(Lissajous, SampledRanges) {
  Rng rng(5);
  const auto p = sample_lissajous(20, 1000.0, 0.2, Vec3::Constant(500), rng);
  for (const auto& uav : p.axes) {
    for (const auto& ax : uav) {
      EXPECT_GE(ax.amplitude, 0.0);
      EXPECT_LE(ax.amplitude, 1000.0);
      EXPECT_GE(ax.rate, 0.0);
      EXPECT_LE(ax.rate, 0.2);
      EXPECT_GE(ax.phase, 0.0);
      EXPECT_LE(ax.phase, 2 * std::numbers::pi);
    }
  }
}

TEST(Trace, AlreadyFittingTraceIsUnchanged) {
  const std::string text =
      "# t,id,x,y,z\n"
      "0,7,0,0,0\n"
      "0,9,1000,1000,1000\n"
      "1,7,250,500,0\n"
      "1,9,1000,0,1000\n";
  const auto snaps = parse_trace(text, 1000.0, Vec3::Constant(500.0));
  ASSERT_EQ(snaps.size(), 2u);
  EXPECT_NEAR((snaps[1].positions[0] - Vec3(250, 500, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((snaps[0].positions[1] - Vec3(1000, 1000, 1000)).norm(), 0.0, 1e-12);
}

TEST(Trace, SinglePointMapsToCenter) {
  const auto snaps = parse_trace("0,1,12,-3,4\n", 1000.0, Vec3(1, 2, 3));
  ASSERT_EQ(snaps.size(), 1u);
  EXPECT_EQ(snaps[0].positions[0], Vec3(1, 2, 3));
}

TEST(Trace, TwoPointScaling) {
  const auto snaps = parse_trace("0,1,0,0,0\n0,2,2000,0,0\n", 1000.0, Vec3::Constant(500));
  EXPECT_NEAR((snaps[0].positions[0] - snaps[0].positions[1]).norm(), 1000.0, 1e-9);
}

TEST(Trace, FiniteDifferenceVelocities) {
  const auto snaps = parse_trace("0,1,0,0,0\n0,2,10,10,10\n2,1,4,0,0\n2,2,10,10,10\n", 10.0,
                                 Vec3::Constant(5));
  ASSERT_EQ(snaps.size(), 2u);
  EXPECT_NEAR((snaps[0].velocities[0] - Vec3(2, 0, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(snaps[1].velocities[1].norm(), 0.0, 1e-12);
}

TEST(Trace, MalformedRowCarriesLineNumber) {
  try {
    parse_trace("0,1,0,0,0\n\n0,2,x,0,0\n", 1000.0, Vec3::Zero());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Trace, TooFewIdsRejected) {
  EXPECT_THROW(parse_trace("0,1,0,0,0\n0,2,1,0,0\n", 1000.0, Vec3::Zero(), 3), ConfigError);
}

TEST(Trace, MissingIdInSnapshotRejected) {
  EXPECT_THROW(parse_trace("0,1,0,0,0\n0,2,1,0,0\n1,1,0,0,0\n", 1000.0, Vec3::Zero()), ConfigError);
}

TEST(Trace, BoundingBoxFitsTheCube) {
  for_all(12, 30, [](Gen& g) {
    std::string text;
    const int ids = g.integer(1, 6);
    const double spread = g.uniform(1.0, 1e5);
    for (int t = 0; t < 4; ++t) {
      for (int id = 0; id < ids; ++id) {
        const Vec3 p = g.vec3(-spread, spread);
        text += std::to_string(t) + "," + std::to_string(id) + "," + std::to_string(p.x()) + "," +
                std::to_string(p.y()) + "," + std::to_string(p.z()) + "\n";
      }
    }
    const double side = g.uniform(10, 2000);
    const Vec3 center = g.vec3(-100, 100);
    for (const auto& s : parse_trace(text, side, center)) {
      for (const auto& p : s.positions) {
        EXPECT_LE((p - center).cwiseAbs().maxCoeff(), side / 2 + 1e-9);
      }
    }
  });
}

TEST(Trace, LoadFromFileMatchesParse) {
  const auto path = std::filesystem::temp_directory_path() / "swarmloc_trace_test.csv";
  {
    std::ofstream out(path);
    out << "0,1,0,0,0\n0,2,2000,0,0\n";
  }
  const auto a = load_trace(path, 1000.0, Vec3::Zero());
  const auto b = parse_trace("0,1,0,0,0\n0,2,2000,0,0\n", 1000.0, Vec3::Zero());
  EXPECT_EQ(a[0].positions, b[0].positions);
  std::filesystem::remove(path);
  EXPECT_THROW(load_trace(path, 1000.0, Vec3::Zero()), ConfigError);
}

}  // namespace
}  // namespace swarmloc
