#include "swarmloc/positioning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "swarmloc/errors.hpp"

namespace swarmloc {

Stacked stack(const std::vector<Vec3>& points) {
  Stacked t(3 * static_cast<Eigen::Index>(points.size()));
  for (std::size_t u = 0; u < points.size(); ++u) t.segment<3>(3 * static_cast<Eigen::Index>(u)) = points[u];
  return t;
}

std::vector<Vec3> unstack(const Stacked& t) {
  std::vector<Vec3> points(static_cast<std::size_t>(t.size() / 3));
  for (std::size_t u = 0; u < points.size(); ++u) points[u] = t.segment<3>(3 * static_cast<Eigen::Index>(u));
  return points;
}

Anchors Anchors::from_swarm(const SwarmState& swarm) {
  return {swarm.anchor_mask(), swarm.positions(), swarm.velocities()};
}

std::size_t Anchors::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

void GdConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("GD stop threshold must be positive");
  if (max_iterations < 1) throw ConfigError("GD needs at least one iteration");
  if (!(beta > 1.0)) throw ConfigError("restart factor beta must exceed 1");
  if (max_restarts < 0) throw ConfigError("restart count must be non-negative");
  if (!(gamma0 > 0.0) || !(gamma_min > 0.0) || !(gamma_max >= gamma_min)) {
    throw ConfigError("invalid GD step bounds");
  }
}

namespace {

constexpr double kVersorGuard = 1e-9;

// Unit vector from b to a; zero when the two points coincide.
inline Vec3 versor(const Vec3& a, const Vec3& b) {
  const Vec3 d = a - b;
  const double r = d.norm();
  return r < kVersorGuard ? Vec3::Zero() : Vec3(d / r);
}

}  // namespace

double square_error(const Stacked& t, const OrderedDistances& obs) {
  const std::size_t n = obs.swarm_size();
  const auto p = unstack(t);
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) dist[a * n + b] = (p[a] - p[b]).norm();

  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double theta = dist[j * n + k] + dist[k * n + i] - dist[j * n + i];
        const double w = obs.at(i, j, k) - theta;
        e += w * w;
      }
    }
  return e;
}

Stacked gradient(const Stacked& t, const OrderedDistances& obs,
                 const std::vector<bool>& anchor_mask) {
  const std::size_t n = obs.swarm_size();
  const auto p = unstack(t);
  std::vector<double> dist(n * n, 0.0);
  std::vector<Vec3> u(n * n, Vec3::Zero());
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      dist[a * n + b] = (p[a] - p[b]).norm();
      u[a * n + b] = versor(p[a], p[b]);
    }

  std::vector<Vec3> g(n, Vec3::Zero());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double theta = dist[j * n + k] + dist[k * n + i] - dist[j * n + i];
        const double w2 = -2.0 * (obs.at(i, j, k) - theta);
        g[i] += w2 * (u[i * n + k] - u[i * n + j]);
        g[j] += w2 * (u[j * n + k] - u[j * n + i]);
        g[k] += w2 * (u[k * n + i] + u[k * n + j]);
      }
    }
  for (std::size_t a = 0; a < anchor_mask.size() && a < n; ++a)
    if (anchor_mask[a]) g[a].setZero();
  return stack(g);
}

double residual_bound(std::size_t n, const OtfsGrid& grid) {
  const double s = grid.distance_step();
  return static_cast<double>(n * (n - 1) * (n - 2)) * s * s / 12.0;
}

GdResult gd_minimize(const OrderedDistances& obs, const Stacked& t0, const Anchors& anchors,
                     const GdConfig& cfg, std::ostream* trace) {
  const std::size_t n = obs.swarm_size();
  if (static_cast<std::size_t>(t0.size()) != 3 * n || anchors.size() != n) {
    throw ConfigError("position vector and anchor set must match the swarm size");
  }
  Stacked t = t0;
  for (std::size_t a = 0; a < n; ++a)
    if (anchors.mask[a]) t.segment<3>(3 * static_cast<Eigen::Index>(a)) = anchors.positions[a];

  auto check = [](double e, const Stacked& g, int it) {
    if (!std::isfinite(e) || !g.allFinite()) {
      throw NumericalError("non-finite square error or gradient at GD iteration " +
                           std::to_string(it));
    }
  };

  GdResult res;
  double e = square_error(t, obs);
  Stacked g = gradient(t, obs, anchors.mask);
  check(e, g, 0);
  res.initial_error = e;
  double gamma = cfg.gamma0;
  if (trace) *trace << 0 << ' ' << e << ' ' << 0.0 << '\n';

  std::vector<double> history{e};
  int it = 0;
  while (it < cfg.max_iterations && e > 0.0) {
    ++it;
    const Stacked t_new = t - gamma * g;
    const double e_new = square_error(t_new, obs);
    const Stacked g_new = gradient(t_new, obs, anchors.mask);
    check(e_new, g_new, it);
    if (trace) *trace << it << ' ' << e_new << ' ' << gamma << '\n';

    const double rel = std::abs(e_new - e) / e;
    const double lagged = history[history.size() >= 3 ? history.size() - 3 : 0];

    if (cfg.step_rule == StepRule::barzilai_borwein) {
      const Stacked s = t_new - t;
      const double sty = s.dot(g_new - g);
      // Non-positive curvature keeps the previous step.
      if (sty > 0.0) gamma = std::clamp(s.squaredNorm() / sty, cfg.gamma_min, cfg.gamma_max);
    }
    t = t_new;
    g = g_new;
    e = e_new;
    history.push_back(e);
    if (rel < cfg.epsilon && e <= lagged) break;
  }
  res.positions = t;
  res.error = e;
  res.iterations = it;
  return res;
}

InitDistribution InitDistribution::uniform_prior(std::size_t n, const Vec3& mean, double std) {
  return {std::vector<Vec3>(n, mean), std};
}

Stacked InitDistribution::draw(const Anchors& anchors, Rng& rng) const {
  const std::size_t n = anchors.size();
  if (mean.size() != n) throw ConfigError("init distribution and anchor set sizes differ");
  std::normal_distribution<double> unit(0.0, 1.0);
  Stacked t(3 * static_cast<Eigen::Index>(n));
  for (std::size_t u = 0; u < n; ++u) {
    Vec3 x = anchors.positions[u];
    if (!anchors.mask[u]) {
      for (int s = 0; s < 3; ++s) x[s] = mean[u][s] + std * unit(rng);
    }
    t.segment<3>(3 * static_cast<Eigen::Index>(u)) = x;
  }
  return t;
}

SolveResult solve_with_restarts(const OrderedDistances& obs, const Anchors& anchors,
                                const GdConfig& cfg, double threshold, const Stacked& init,
                                const InitDistribution& draws, Rng& rng) {
  SolveResult out;
  out.threshold = threshold;
  out.best.error = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
    const Stacked t0 = (attempt == 0 && init.size() > 0) ? init : draws.draw(anchors, rng);
    GdResult r = gd_minimize(obs, t0, anchors, cfg);
    ++out.attempts;
    out.total_iterations += r.iterations;
    const bool ok = r.error <= threshold;
    if (ok || r.error < out.best.error) out.best = std::move(r);
    if (ok) {
      out.accepted = true;
      break;
    }
  }
  return out;
}

}  // namespace swarmloc
