#include "swarmloc/assignment_bp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "swarmloc/errors.hpp"
#include "swarmloc/noise_kernel.hpp"

namespace swarmloc {

void BpConfig::validate() const {
  if (iterations < 1) throw ConfigError("BP needs at least one iteration");
  if (damping < 0.0 || damping >= 1.0) throw ConfigError("damping must lie in [0, 1)");
  if (message_floor < 0.0) throw ConfigError("message floor must be non-negative");
}

MarginalTensor::MarginalTensor(std::size_t n) : n_(n), p_(n * n * n * (n - 1), 0.0) {}

FactorGraph::FactorGraph(std::size_t n, bool with_doppler) : n_(n) {
  if (n < 4) throw ConfigError("the assignment factor graph needs at least 4 UAVs");
  constexpr auto npos = std::numeric_limits<std::size_t>::max();
  lookup_.assign(n * n * n, npos);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        lookup_[(i * n + j) * n + k] = triples_.size();
        triples_.push_back({i, j, k});
      }
    }
  }

  auto add = [&](std::array<std::size_t, 4> q, bool doppler) {
    const auto [i, j, k, h] = q;
    CheckNode c{q, {}, doppler};
    if (!doppler) {
      c.vars = {variable_id(i, j, k), variable_id(i, j, h), variable_id(i, k, h),
                variable_id(j, h, k)};
    } else {
      c.vars = {variable_id(i, j, k), variable_id(i, j, h), variable_id(k, h, i),
                variable_id(k, h, j)};
    }
    checks_.push_back(c);
  };
  for (int pass = 0; pass < (with_doppler ? 2 : 1); ++pass) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          for (std::size_t h = 0; h < n; ++h) {
            if (i == j || i == k || i == h || j == k || j == h || k == h) continue;
            add({i, j, k, h}, pass == 1);
          }
  }

  incident_.resize(triples_.size());
  for (std::size_t c = 0; c < checks_.size(); ++c) {
    for (std::size_t s = 0; s < 4; ++s) incident_[checks_[c].vars[s]].emplace_back(c, s);
  }
}

namespace {

// Normalizes in place; returns false when the vector carries no mass.
bool normalize(double* x, std::size_t d) {
  double sum = 0.0;
  for (std::size_t m = 0; m < d; ++m) sum += x[m];
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    for (std::size_t m = 0; m < d; ++m) x[m] = 1.0 / static_cast<double>(d);
    return false;
  }
  for (std::size_t m = 0; m < d; ++m) x[m] /= sum;
  return true;
}

// exp-normalizes log values; false when every entry is -inf.
bool normalize_log(const double* logv, double* out, std::size_t d) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < d; ++m) mx = std::max(mx, logv[m]);
  if (!std::isfinite(mx)) {
    for (std::size_t m = 0; m < d; ++m) out[m] = 1.0 / static_cast<double>(d);
    return false;
  }
  for (std::size_t m = 0; m < d; ++m) out[m] = std::exp(logv[m] - mx);
  return normalize(out, d);
}

double safe_log(double x) {
  return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
}

class BeliefPropagation {
 public:
  BeliefPropagation(const ChannelLists& lists, const OtfsGrid& grid, const BpConfig& cfg)
      : lists_(lists),
        cfg_(cfg),
        graph_(lists.swarm_size(), cfg.use_doppler_checks),
        delay_kernel_(grid.distance_step()),
        doppler_kernel_(grid.velocity_step()),
        d_(lists.swarm_size() - 2) {
    const std::size_t edges = graph_.checks().size() * 4;
    lambda_.assign(edges * d_, 1.0 / static_cast<double>(d_));
    zeta_.assign(edges * d_, 1.0 / static_cast<double>(d_));
    for (const auto& c : graph_.checks()) {
      (c.doppler ? diag_.doppler_checks : diag_.delay_checks)++;
    }
  }

  BpResult run() {
    for (int it = 0; it < cfg_.iterations; ++it) {
      for (std::size_t c = 0; c < graph_.checks().size(); ++c) update_check(c);
      for (std::size_t v = 0; v < graph_.variable_count(); ++v) update_variable(v);
    }
    return {beliefs(), diag_};
  }

 private:
  double* zeta(std::size_t c, std::size_t slot) { return &zeta_[(4 * c + slot) * d_]; }
  double* lambda(std::size_t c, std::size_t slot) { return &lambda_[(4 * c + slot) * d_]; }

  // Slot m of a variable maps to list index m + 1; index 0 is the pinned LoS entry.
  void update_check(std::size_t c) {
    const CheckNode& node = graph_.checks()[c];
    const auto [i, j, k, h] = node.quad;
    const std::size_t d = d_;

    // Residual = a[m] + sign_b * a[n] + b[s] + c[t]; see the two check families.
    std::vector<double> am(d), an(d), bs(d), ct(d);
    const NoiseKernel& kernel = node.doppler ? doppler_kernel_ : delay_kernel_;
    for (std::size_t m = 0; m < d; ++m) {
      if (!node.doppler) {
        am[m] = lists_.distance(i, j, m + 1);
        an[m] = -lists_.distance(i, j, m + 1);
        bs[m] = lists_.distance(i, k, m + 1);
        ct[m] = -lists_.distance(j, h, m + 1);
      } else {
        am[m] = lists_.velocity(i, j, m + 1);
        an[m] = lists_.velocity(i, j, m + 1);
        bs[m] = -lists_.velocity(k, h, m + 1);
        ct[m] = -lists_.velocity(k, h, m + 1);
      }
    }

    const double* l1 = lambda(c, 0);
    const double* l2 = lambda(c, 1);
    const double* l3 = lambda(c, 2);
    const double* l4 = lambda(c, 3);
    double* z1 = zeta(c, 0);
    double* z2 = zeta(c, 1);
    double* z3 = zeta(c, 2);
    double* z4 = zeta(c, 3);
    std::fill(z1, z1 + d, 0.0);
    std::fill(z2, z2 + d, 0.0);
    std::fill(z3, z3 + d, 0.0);
    std::fill(z4, z4 + d, 0.0);

    const double support = 2.0 * kernel.step();
    for (std::size_t m = 0; m < d; ++m) {
      for (std::size_t n = 0; n < d; ++n) {
        if (n == m) continue;
        const double mn = am[m] + an[n];
        const double w12 = l1[m] * l2[n];
        for (std::size_t s = 0; s < d; ++s) {
          const double mns = mn + bs[s];
          for (std::size_t t = 0; t < d; ++t) {
            if (node.doppler && s == t) continue;
            const double r = mns + ct[t];
            if (std::abs(r) >= support) continue;
            const double g = kernel(r);
            z1[m] += g * l2[n] * l3[s] * l4[t];
            z2[n] += g * l1[m] * l3[s] * l4[t];
            z3[s] += g * w12 * l4[t];
            z4[t] += g * w12 * l3[s];
          }
        }
      }
    }
    for (double* z : {z1, z2, z3, z4}) {
      if (!normalize(z, d)) ++diag_.underflow_resets;
      if (cfg_.message_floor > 0.0) {
        for (std::size_t m = 0; m < d; ++m) z[m] = std::max(z[m], cfg_.message_floor);
        normalize(z, d);
      }
      track_normalization(z);
    }
  }

  void update_variable(std::size_t v) {
    const auto& edges = graph_.edges_of(v);
    const std::size_t deg = edges.size();
    const std::size_t d = d_;
    // Leave-one-out log products via prefix and suffix sums.
    std::vector<double> logs(deg * d), prefix((deg + 1) * d, 0.0), suffix((deg + 1) * d, 0.0);
    for (std::size_t e = 0; e < deg; ++e) {
      const double* z = zeta(edges[e].first, edges[e].second);
      for (std::size_t m = 0; m < d; ++m) logs[e * d + m] = safe_log(z[m]);
    }
    for (std::size_t e = 0; e < deg; ++e)
      for (std::size_t m = 0; m < d; ++m)
        prefix[(e + 1) * d + m] = prefix[e * d + m] + logs[e * d + m];
    for (std::size_t e = deg; e-- > 0;)
      for (std::size_t m = 0; m < d; ++m)
        suffix[e * d + m] = suffix[(e + 1) * d + m] + logs[e * d + m];

    std::vector<double> excl(d), fresh(d);
    for (std::size_t e = 0; e < deg; ++e) {
      for (std::size_t m = 0; m < d; ++m) excl[m] = prefix[e * d + m] + suffix[(e + 1) * d + m];
      if (!normalize_log(excl.data(), fresh.data(), d)) ++diag_.underflow_resets;
      double* l = lambda(edges[e].first, edges[e].second);
      for (std::size_t m = 0; m < d; ++m) {
        l[m] = (1.0 - cfg_.damping) * fresh[m] + cfg_.damping * l[m];
      }
      track_normalization(l);
    }
  }

  MarginalTensor beliefs() {
    const std::size_t n = lists_.swarm_size();
    MarginalTensor pi(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) pi.at(i, j, j, 0) = 1.0;

    std::vector<double> total(d_), out(d_);
    for (std::size_t v = 0; v < graph_.variable_count(); ++v) {
      std::fill(total.begin(), total.end(), 0.0);
      for (const auto& [c, s] : graph_.edges_of(v)) {
        const double* z = zeta(c, s);
        for (std::size_t m = 0; m < d_; ++m) total[m] += safe_log(z[m]);
      }
      if (!normalize_log(total.data(), out.data(), d_)) ++diag_.underflow_resets;
      track_normalization(out.data());
      const auto& [i, j, k] = graph_.variable(v);
      for (std::size_t m = 0; m < d_; ++m) pi.at(i, j, k, m + 1) = out[m];
    }
    return pi;
  }

  void track_normalization(const double* x) {
    double sum = 0.0;
    for (std::size_t m = 0; m < d_; ++m) sum += x[m];
    diag_.max_normalization_error = std::max(diag_.max_normalization_error, std::abs(sum - 1.0));
  }

  const ChannelLists& lists_;
  const BpConfig& cfg_;
  FactorGraph graph_;
  NoiseKernel delay_kernel_;
  NoiseKernel doppler_kernel_;
  std::size_t d_;
  std::vector<double> lambda_;
  std::vector<double> zeta_;
  BpDiagnostics diag_;
};

}  // namespace

BpResult compute_marginals(const ChannelLists& lists, const OtfsGrid& grid, const BpConfig& cfg) {
  cfg.validate();
  grid.validate();
  BeliefPropagation bp(lists, grid, cfg);
  return bp.run();
}

AssignmentMaps estimate_maps(const MarginalTensor& marginals) {
  const std::size_t n = marginals.swarm_size();
  AssignmentMaps maps(n);
  std::vector<bool> row_done(n), col_done(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      std::fill(row_done.begin(), row_done.end(), false);
      std::fill(col_done.begin(), col_done.end(), false);
      row_done[i] = true;
      for (std::size_t step = 0; step + 1 < n; ++step) {
        double best = -1.0;
        std::size_t bk = 0, bm = 0;
        for (std::size_t k = 0; k < n; ++k) {
          if (row_done[k]) continue;
          for (std::size_t m = 0; m + 1 < n; ++m) {
            if (col_done[m]) continue;
            const double p = marginals.at(i, j, k, m);
            if (p > best) {
              best = p;
              bk = k;
              bm = m;
            }
          }
        }
        maps.at(i, j, bk) = static_cast<int>(bm);
        row_done[bk] = true;
        col_done[bm] = true;
      }
    }
  }
  return maps;
}

double assignment_log_score(const ChannelLists& lists, const OtfsGrid& grid,
                            const AssignmentMaps& maps) {
  const std::size_t n = lists.swarm_size();
  const NoiseKernel g(grid.distance_step());
  double score = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t h = 0; h < n; ++h) {
          if (i == j || i == k || i == h || j == k || j == h || k == h) continue;
          const double z = lists.distance(i, j, static_cast<std::size_t>(maps.at(i, j, k))) -
                           lists.distance(i, j, static_cast<std::size_t>(maps.at(i, j, h))) +
                           lists.distance(i, k, static_cast<std::size_t>(maps.at(i, k, h))) -
                           lists.distance(j, h, static_cast<std::size_t>(maps.at(j, h, k)));
          score += safe_log(g(z));
        }
  return score;
}

void dump_marginals(std::ostream& out, const MarginalTensor& marginals) {
  const std::size_t n = marginals.swarm_size();
  out << std::setprecision(10);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        if (i == j || k == i) continue;
        out << i << ' ' << j << ' ' << k;
        for (std::size_t m = 0; m + 1 < n; ++m) out << ' ' << marginals.at(i, j, k, m);
        out << '\n';
      }
}

}  // namespace swarmloc
