#include "swarmloc/tip.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "swarmloc/errors.hpp"

namespace swarmloc {

std::string to_string(TipMode m) {
  switch (m) {
    case TipMode::cold_start:
      return "cold_start";
    case TipMode::tracking:
      return "tracking";
    case TipMode::genie_aided:
      return "genie_aided";
  }
  return "cold_start";
}

TipMode tip_mode_from_string(const std::string& s) {
  if (s == "cold_start" || s == "cold-start") return TipMode::cold_start;
  if (s == "tracking") return TipMode::tracking;
  if (s == "genie_aided" || s == "genie-aided" || s == "ga") return TipMode::genie_aided;
  throw ConfigError("unknown TIP mode '" + s + "'");
}

void TipConfig::validate() const {
  if (turbo_iterations < 0) throw ConfigError("turbo iteration count must be non-negative");
  bp.validate();
  gd.validate();
  if (mode == TipMode::tracking && !(dt > 0.0)) throw ConfigError("tracking needs dt > 0");
  if (!(prior_std > 0.0) || !(tracking_restart_std > 0.0)) {
    throw ConfigError("init spreads must be positive");
  }
}

OrderedObservations apply_maps(const ChannelLists& lists, const AssignmentMaps& maps) {
  const std::size_t n = lists.swarm_size();
  if (maps.swarm_size() != n) throw ConfigError("maps and lists disagree on the swarm size");
  if (!maps.is_bijective()) throw ConfigError("assignment maps are not bijective");
  OrderedObservations out{OrderedDistances(n), TripleTable(n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        const auto m = static_cast<std::size_t>(maps.at(i, j, k));
        if (k != j) out.distance.at(i, j, k) = lists.distance(i, j, m);
        out.velocity.at(i, j, k) = lists.velocity(i, j, m);
      }
    }
  return out;
}

AssignmentMaps compute_maps(const std::vector<Vec3>& p) {
  const std::size_t n = p.size();
  AssignmentMaps maps(n);
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      order.clear();
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        order.emplace_back(k == j ? 0.0 : red_distance(p[i], p[j], p[k]), k);
      }
      std::sort(order.begin(), order.end());
      for (std::size_t m = 0; m < order.size(); ++m) {
        maps.at(i, j, order[m].second) = static_cast<int>(m);
      }
    }
  return maps;
}

namespace {

struct Attempt {
  Stacked positions;
  VelocityEstimate velocity;
  AssignmentMaps maps;
  std::vector<TipIteration> iterations;
  double residual = 0.0;
  int gd_iterations = 0;
};

Attempt turbo_loop(const MeasurementSet& meas, const Anchors& anchors, const TipConfig& cfg,
                   AssignmentMaps maps, const Stacked& t0) {
  Attempt a;
  Stacked t = t0;
  for (int l = 0; l <= cfg.turbo_iterations; ++l) {
    const OrderedObservations obs = apply_maps(meas.lists, maps);
    const GdResult gd = gd_minimize(obs.distance, t, anchors, cfg.gd);
    t = gd.positions;
    const auto p = unstack(t);
    a.velocity = estimate_velocities(build_design(p, anchors.mask), obs.velocity,
                                     anchors.velocities);
    a.gd_iterations += gd.iterations;
    TipIteration rec;
    rec.residual = gd.error;
    rec.gd_iterations = gd.iterations;
    a.maps = maps;
    a.residual = gd.error;
    if (l < cfg.turbo_iterations) {
      AssignmentMaps next = compute_maps(p);
      rec.map_changes = next.count_differences(maps);
      maps = std::move(next);
    }
    a.iterations.push_back(rec);
  }
  a.positions = t;
  return a;
}

EstimationResult run_with_restarts(const MeasurementSet& meas, const Anchors& anchors,
                                   const TipConfig& cfg, const AssignmentMaps& maps0,
                                   const Stacked& first_init, const InitDistribution& draws,
                                   std::uint64_t seed) {
  const std::size_t n = meas.lists.swarm_size();
  if (anchors.size() != n) throw ConfigError("anchor set does not match the swarm size");
  Rng rng(seed);
  const double threshold = cfg.gd.beta * residual_bound(n, meas.grid);

  EstimationResult out;
  Attempt best;
  best.residual = std::numeric_limits<double>::infinity();
  bool accepted = false;
  for (int attempt = 0; attempt <= cfg.gd.max_restarts; ++attempt) {
    const Stacked t0 =
        (attempt == 0 && first_init.size() > 0) ? first_init : draws.draw(anchors, rng);
    Attempt a = turbo_loop(meas, anchors, cfg, maps0, t0);
    ++out.attempts;
    out.total_gd_iterations += a.gd_iterations;
    accepted = a.residual <= threshold;
    if (accepted || a.residual < best.residual) best = std::move(a);
    if (accepted) break;
  }

  out.positions = unstack(best.positions);
  out.velocities = best.velocity.velocities;
  out.velocity_rank_deficient = best.velocity.rank_deficient;
  out.residual = best.residual;
  out.maps = std::move(best.maps);
  out.initial_maps = maps0;
  out.iterations = std::move(best.iterations);
  out.failed = !accepted;
  return out;
}

}  // namespace

EstimationResult run_cold_start(const MeasurementSet& meas, const Anchors& anchors,
                                const TipConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const BpResult bp = compute_marginals(meas, cfg.bp);
  const AssignmentMaps maps0 = estimate_maps(bp.marginals);
  const auto draws =
      InitDistribution::uniform_prior(meas.lists.swarm_size(), cfg.prior_mean, cfg.prior_std);
  EstimationResult r = run_with_restarts(meas, anchors, cfg, maps0, Stacked(), draws, seed);
  r.bp = bp.diagnostics;
  return r;
}

TrackingResult run_tracking_step(const MeasurementSet& meas, const std::vector<Vec3>& prior,
                                 const Anchors& anchors, const TipConfig& cfg,
                                 std::uint64_t seed) {
  cfg.validate();
  if (prior.size() != meas.lists.swarm_size()) {
    throw ConfigError("prior positions do not match the swarm size");
  }
  const InitDistribution draws{prior, cfg.tracking_restart_std};
  TrackingResult out;
  out.estimate =
      run_with_restarts(meas, anchors, cfg, compute_maps(prior), stack(prior), draws, seed);
  out.forecast.resize(prior.size());
  for (std::size_t u = 0; u < prior.size(); ++u) {
    out.forecast[u] = out.estimate.positions[u] + cfg.dt * out.estimate.velocities[u];
  }
  return out;
}

EstimationResult run_genie_aided(const MeasurementSet& meas, const Anchors& anchors,
                                 const TipConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t n = meas.lists.swarm_size();
  if (anchors.size() != n) throw ConfigError("anchor set does not match the swarm size");
  Rng rng(seed);
  const OrderedObservations obs = apply_maps(meas.lists, meas.truth_maps);
  const auto draws = InitDistribution::uniform_prior(n, cfg.prior_mean, cfg.prior_std);
  const double threshold = cfg.gd.beta * residual_bound(n, meas.grid);
  const SolveResult s =
      solve_with_restarts(obs.distance, anchors, cfg.gd, threshold, Stacked(), draws, rng);

  EstimationResult out;
  out.positions = unstack(s.best.positions);
  const VelocityEstimate v =
      estimate_velocities(build_design(out.positions, anchors.mask), obs.velocity,
                          anchors.velocities);
  out.velocities = v.velocities;
  out.velocity_rank_deficient = v.rank_deficient;
  out.residual = s.best.error;
  out.maps = meas.truth_maps;
  out.initial_maps = meas.truth_maps;
  out.iterations.push_back({s.best.error, 0, s.best.iterations});
  out.failed = !s.accepted;
  out.attempts = s.attempts;
  out.total_gd_iterations = s.total_iterations;
  return out;
}

}  // namespace swarmloc
