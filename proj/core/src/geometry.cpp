#include "swarmloc/geometry.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "swarmloc/errors.hpp"

namespace swarmloc {

SwarmState::SwarmState(std::vector<UavState> uavs) : uavs_(std::move(uavs)) {
  for (std::size_t i = 0; i < uavs_.size(); ++i) {
    const auto& u = uavs_[i];
    if (!u.position.allFinite() || !u.velocity.allFinite()) {
      throw ConfigError("UAV " + std::to_string(i) + " has a non-finite state");
    }
    uavs_[i].id = static_cast<int>(i);
  }
}

int SwarmState::anchor_count() const {
  return static_cast<int>(std::count_if(uavs_.begin(), uavs_.end(),
                                        [](const UavState& u) { return u.is_anchor; }));
}

std::vector<Vec3> SwarmState::positions() const {
  std::vector<Vec3> out;
  out.reserve(uavs_.size());
  for (const auto& u : uavs_) out.push_back(u.position);
  return out;
}

std::vector<Vec3> SwarmState::velocities() const {
  std::vector<Vec3> out;
  out.reserve(uavs_.size());
  for (const auto& u : uavs_) out.push_back(u.velocity);
  return out;
}

std::vector<bool> SwarmState::anchor_mask() const {
  std::vector<bool> out;
  out.reserve(uavs_.size());
  for (const auto& u : uavs_) out.push_back(u.is_anchor);
  return out;
}

bool SwarmState::has_distinct_positions(double tol) const {
  for (std::size_t i = 0; i < uavs_.size(); ++i) {
    for (std::size_t j = i + 1; j < uavs_.size(); ++j) {
      if ((uavs_[i].position - uavs_[j].position).norm() <= tol) return false;
    }
  }
  return true;
}

bool non_coplanar(const std::vector<Vec3>& points) {
  if (points.size() < 4) return false;
  Eigen::MatrixXd diffs(3, static_cast<Eigen::Index>(points.size() - 1));
  double scale = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    diffs.col(static_cast<Eigen::Index>(i - 1)) = points[i] - points[0];
    scale = std::max(scale, diffs.col(static_cast<Eigen::Index>(i - 1)).norm());
  }
  if (scale == 0.0) return false;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(diffs / scale);
  return svd.singularValues()(2) > 1e-9;
}

std::vector<Vec3> default_anchor_positions() {
  return {Vec3(0, 0, 0), Vec3(1000, 0, 0), Vec3(0, 1000, 0), Vec3(0, 0, 1000)};
}

SwarmState sample_random_swarm(const RandomSwarmParams& params, std::uint64_t seed) {
  const auto a = static_cast<int>(params.anchor_positions.size());
  if (params.n < a) throw ConfigError("swarm size smaller than anchor count");
  if (a >= 4 && !non_coplanar(params.anchor_positions)) {
    throw ConfigError("anchors are coplanar");
  }
  if (params.pos_std < 0.0 || params.vel_std < 0.0) {
    throw ConfigError("standard deviations must be non-negative");
  }

  Rng rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<UavState> uavs(static_cast<std::size_t>(params.n));
  for (int i = 0; i < params.n; ++i) {
    auto& u = uavs[static_cast<std::size_t>(i)];
    if (i < a) {
      u.position = params.anchor_positions[static_cast<std::size_t>(i)];
      u.velocity.setZero();
      u.is_anchor = true;
      continue;
    }
    for (int s = 0; s < 3; ++s) u.position[s] = params.pos_mean + params.pos_std * unit(rng);
    for (int s = 0; s < 3; ++s) u.velocity[s] = params.vel_std * unit(rng);
  }
  return SwarmState(std::move(uavs));
}

LissajousSample lissajous_state(const LissajousParams& params, std::size_t uav, double t) {
  LissajousSample out;
  const auto& ax = params.axes.at(uav);
  const Vec3 center = uav < params.centers.size() ? params.centers[uav] : Vec3::Zero();
  for (int s = 0; s < 3; ++s) {
    const auto& c = ax[static_cast<std::size_t>(s)];
    const double arg = c.rate * t + c.phase;
    out.position[s] = center[s] + c.amplitude * std::sin(arg);
    out.velocity[s] = c.amplitude * c.rate * std::cos(arg);
  }
  return out;
}

LissajousParams sample_lissajous(std::size_t n, double amplitude_scale, double max_rate,
                                 const Vec3& center, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  LissajousParams p;
  p.axes.resize(n);
  p.centers.assign(n, center);
  for (auto& uav : p.axes) {
    for (auto& ax : uav) {
      ax.amplitude = amplitude_scale * u01(rng);
      ax.rate = max_rate * u01(rng);
      ax.phase = 2.0 * std::numbers::pi * u01(rng);
    }
  }
  return p;
}

namespace {

struct TraceRow {
  double t;
  long id;
  Vec3 p;
};

std::vector<TraceRow> parse_rows(std::istream& in) {
  std::vector<TraceRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    TraceRow row{};
    std::string rest;
    if (!(fields >> row.t >> row.id >> row.p.x() >> row.p.y() >> row.p.z()) || (fields >> rest)) {
      throw ParseError("expected 't,id,x,y,z'", line_no);
    }
    if (!std::isfinite(row.t) || !row.p.allFinite()) {
      throw ParseError("non-finite value", line_no);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<TraceSnapshot> build_snapshots(std::vector<TraceRow> rows, double cube_side,
                                           const Vec3& cube_center, std::size_t min_uavs) {
  if (cube_side <= 0.0) throw ConfigError("cube side must be positive");
  if (rows.empty()) throw ConfigError("trace has no rows");

  std::map<long, std::size_t> dense;
  for (const auto& r : rows) dense.emplace(r.id, 0);
  if (dense.size() < min_uavs) {
    throw ConfigError("trace has " + std::to_string(dense.size()) + " distinct ids, need " +
                      std::to_string(min_uavs));
  }
  std::size_t next = 0;
  for (auto& [id, idx] : dense) idx = next++;

  Vec3 lo = rows.front().p, hi = rows.front().p;
  for (const auto& r : rows) {
    lo = lo.cwiseMin(r.p);
    hi = hi.cwiseMax(r.p);
  }
  // One scale for all axes keeps the map a similarity; a degenerate box maps to the center.
  const double extent = (hi - lo).maxCoeff();
  const double scale = extent > 0.0 ? cube_side / extent : 1.0;
  const Vec3 mid = 0.5 * (lo + hi);

  std::map<double, std::vector<std::pair<std::size_t, Vec3>>> by_time;
  for (const auto& r : rows) {
    by_time[r.t].emplace_back(dense.at(r.id), cube_center + scale * (r.p - mid));
  }

  std::vector<TraceSnapshot> snaps;
  for (const auto& [t, entries] : by_time) {
    TraceSnapshot s;
    s.time = t;
    s.positions.assign(dense.size(), Vec3::Constant(std::numeric_limits<double>::quiet_NaN()));
    for (const auto& [idx, p] : entries) s.positions[idx] = p;
    for (const auto& p : s.positions) {
      if (!p.allFinite()) {
        throw ConfigError("snapshot at t=" + std::to_string(t) + " does not list every UAV");
      }
    }
    snaps.push_back(std::move(s));
  }

  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = k + 1 == snaps.size() ? k : k + 1;
    const double dt = snaps[b].time - snaps[a].time;
    snaps[k].velocities.assign(dense.size(), Vec3::Zero());
    if (dt <= 0.0) continue;
    for (std::size_t u = 0; u < dense.size(); ++u) {
      snaps[k].velocities[u] = (snaps[b].positions[u] - snaps[a].positions[u]) / dt;
    }
  }
  return snaps;
}

}  // namespace

std::vector<TraceSnapshot> parse_trace(const std::string& text, double cube_side,
                                       const Vec3& cube_center, std::size_t min_uavs) {
  std::istringstream in(text);
  return build_snapshots(parse_rows(in), cube_side, cube_center, min_uavs);
}

std::vector<TraceSnapshot> load_trace(const std::filesystem::path& path, double cube_side,
                                      const Vec3& cube_center, std::size_t min_uavs) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file " + path.string());
  return build_snapshots(parse_rows(in), cube_side, cube_center, min_uavs);
}

}  // namespace swarmloc
