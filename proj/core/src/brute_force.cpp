#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "swarmloc/assignment_bp.hpp"
#include "swarmloc/errors.hpp"
#include "swarmloc/noise_kernel.hpp"

namespace swarmloc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Pair {
  std::size_t i, j;
  std::vector<std::size_t> reflectors;  // k not in {i, j}, ascending
};

struct Check {
  std::array<std::size_t, 4> quad;
  std::array<std::size_t, 3> pairs;  // (i,j), (i,k), (j,h) pair ids
};

class BranchAndBound {
 public:
  BranchAndBound(const ChannelLists& lists, const OtfsGrid& grid)
      : lists_(lists), n_(lists.swarm_size()), kernel_(grid.distance_step()) {
    const std::size_t n = n_;
    pair_id_.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        Pair p{i, j, {}};
        for (std::size_t k = 0; k < n; ++k)
          if (k != i && k != j) p.reflectors.push_back(k);
        pair_id_[i * n + j] = pairs_.size();
        pairs_.push_back(p);
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          for (std::size_t h = 0; h < n; ++h) {
            if (i == j || i == k || i == h || j == k || j == h || k == h) continue;
            checks_.push_back({{i, j, k, h}, {pair_id_[i * n + j], pair_id_[i * n + k],
                                              pair_id_[j * n + h]}});
          }

    std::vector<std::size_t> base(n - 2);
    std::iota(base.begin(), base.end(), std::size_t{1});
    do perms_.push_back(base);
    while (std::next_permutation(base.begin(), base.end()));

    order_pairs();
    log_peak_ = std::log(kernel_.peak());
  }

  AssignmentMaps solve() {
    slots_.assign(n_ * n_ * n_, -1);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        if (i != j) slots_[(i * n_ + j) * n_ + j] = 0;

    // Fallback when no assignment has finite score: first permutation everywhere.
    for (const auto& p : pairs_)
      for (std::size_t r = 0; r < p.reflectors.size(); ++r)
        slots_[(p.i * n_ + p.j) * n_ + p.reflectors[r]] = static_cast<int>(perms_[0][r]);
    best_slots_ = slots_;
    best_ = kNegInf;

    recurse(0, 0.0, checks_.size());
    AssignmentMaps maps(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t k = 0; k < n_; ++k)
          if (i != j && k != i) maps.at(i, j, k) = best_slots_[(i * n_ + j) * n_ + k];
    return maps;
  }

 private:
  // Greedy pair order so that checks complete as early as possible.
  void order_pairs() {
    std::vector<bool> placed(pairs_.size(), false);
    std::vector<std::size_t> missing(checks_.size(), 3);
    completes_.assign(pairs_.size(), {});
    for (std::size_t step = 0; step < pairs_.size(); ++step) {
      std::size_t best = pairs_.size();
      long best_gain = -1;
      for (std::size_t p = 0; p < pairs_.size(); ++p) {
        if (placed[p]) continue;
        long gain = 0;
        for (std::size_t c = 0; c < checks_.size(); ++c) {
          const auto& cp = checks_[c].pairs;
          if (std::find(cp.begin(), cp.end(), p) == cp.end()) continue;
          const auto uses = std::count(cp.begin(), cp.end(), p);
          if (missing[c] == static_cast<std::size_t>(uses)) gain += 1000;
          else gain += 1;
        }
        if (gain > best_gain) {
          best_gain = gain;
          best = p;
        }
      }
      placed[best] = true;
      order_.push_back(best);
      for (std::size_t c = 0; c < checks_.size(); ++c) {
        const auto& cp = checks_[c].pairs;
        const auto uses = static_cast<std::size_t>(std::count(cp.begin(), cp.end(), best));
        if (uses == 0) continue;
        missing[c] -= uses;
        if (missing[c] == 0) completes_[step].push_back(c);
      }
    }
  }

  double check_log(const Check& c) const {
    const auto [i, j, k, h] = c.quad;
    auto slot = [&](std::size_t a, std::size_t b, std::size_t r) {
      return static_cast<std::size_t>(slots_[(a * n_ + b) * n_ + r]);
    };
    const double z = lists_.distance(i, j, slot(i, j, k)) - lists_.distance(i, j, slot(i, j, h)) +
                     lists_.distance(i, k, slot(i, k, h)) - lists_.distance(j, h, slot(j, h, k));
    const double g = kernel_(z);
    return g > 0.0 ? std::log(g) : kNegInf;
  }

  void recurse(std::size_t depth, double score, std::size_t remaining) {
    if (depth == order_.size()) {
      if (score > best_) {
        best_ = score;
        best_slots_ = slots_;
      }
      return;
    }
    const Pair& p = pairs_[order_[depth]];
    const auto& done = completes_[depth];
    for (const auto& perm : perms_) {
      for (std::size_t r = 0; r < p.reflectors.size(); ++r)
        slots_[(p.i * n_ + p.j) * n_ + p.reflectors[r]] = static_cast<int>(perm[r]);
      double s = score;
      for (std::size_t c : done) {
        s += check_log(checks_[c]);
        if (s == kNegInf) break;
      }
      if (s == kNegInf) continue;
      const std::size_t left = remaining - done.size();
      if (s + static_cast<double>(left) * log_peak_ <= best_) continue;
      recurse(depth + 1, s, left);
    }
  }

  const ChannelLists& lists_;
  std::size_t n_;
  NoiseKernel kernel_;
  std::vector<Pair> pairs_;
  std::vector<std::size_t> pair_id_;
  std::vector<Check> checks_;
  std::vector<std::vector<std::size_t>> perms_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::size_t>> completes_;
  std::vector<int> slots_;
  std::vector<int> best_slots_;
  double best_ = kNegInf;
  double log_peak_ = 0.0;
};

}  // namespace

AssignmentMaps brute_force_maps(const ChannelLists& lists, const OtfsGrid& grid) {
  const std::size_t n = lists.swarm_size();
  if (n < 4 || n > 5) throw ConfigError("exhaustive assignment search supports 4 or 5 UAVs only");
  grid.validate();
  return BranchAndBound(lists, grid).solve();
}

}  // namespace swarmloc
