#pragma once

// Seeded generators for property tests. Every property runs a fixed number
// of cases; case c draws from its own engine so a failure names the case.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "swarmloc/geometry.hpp"

namespace swarmloc::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  Rng& rng() { return rng_; }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double mean, double std) { return std::normal_distribution<double>(mean, std)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::uint64_t bits() { return rng_(); }

  Vec3 vec3(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }
  Vec3 gaussian3(double mean, double std) { return {normal(mean, std), normal(mean, std), normal(mean, std)}; }

  /// Uniformly distributed rotation (normalized Gaussian quaternion).
  Eigen::Matrix3d rotation() {
    Eigen::Quaterniond q(normal(0, 1), normal(0, 1), normal(0, 1), normal(0, 1));
    q.normalize();
    return q.toRotationMatrix();
  }

  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    std::shuffle(p.begin(), p.end(), rng_);
    return p;
  }

  /// Scenario-prior swarm with the default anchors (or none).
  SwarmState swarm(int n, bool with_anchors = true) {
    RandomSwarmParams p;
    p.n = n;
    if (!with_anchors) p.anchor_positions.clear();
    return sample_random_swarm(p, bits());
  }

 private:
  Rng rng_;
};

/// Runs body(gen) for `cases` independent cases derived from `seed`.
template <typename Body>
void for_all(std::uint64_t seed, int cases, Body&& body) {
  std::seed_seq base{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::vector<std::uint32_t> seeds(static_cast<std::size_t>(cases));
  base.generate(seeds.begin(), seeds.end());
  for (int c = 0; c < cases; ++c) {
    SCOPED_TRACE("property case " + std::to_string(c));
    Gen gen(seeds[static_cast<std::size_t>(c)]);
    body(gen);
    if (::testing::Test::HasFatalFailure()) return;
  }
}

}  // namespace swarmloc::testing
