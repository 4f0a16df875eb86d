#include "swarmloc/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "swarmloc/errors.hpp"

namespace swarmloc {

void OtfsGrid::validate() const {
  if (!(bandwidth_hz > 0.0) || !(frame_s > 0.0) || !(carrier_hz > 0.0) || !(c > 0.0)) {
    throw ConfigError("grid parameters B, T_f, f_c and c must be positive");
  }
}

std::string to_string(NoiseModel m) {
  switch (m) {
    case NoiseModel::quantized:
      return "quantized";
    case NoiseModel::gaussian:
      return "gaussian";
    case NoiseModel::noiseless:
      return "noiseless";
  }
  return "quantized";
}

NoiseModel noise_model_from_string(const std::string& s) {
  if (s == "quantized") return NoiseModel::quantized;
  if (s == "gaussian") return NoiseModel::gaussian;
  if (s == "noiseless") return NoiseModel::noiseless;
  throw ConfigError("unknown noise model '" + s + "'");
}

namespace {

constexpr double kCoincident = 1e-9;

double checked_distance(const Vec3& a, const Vec3& b) {
  const double d = (a - b).norm();
  if (d <= kCoincident) throw DomainError("coincident UAV positions");
  return d;
}

// d/dt |p_a - p_b| for the given velocities.
double range_rate(const Vec3& pa, const Vec3& pb, const Vec3& va, const Vec3& vb) {
  const Vec3 diff = pa - pb;
  const double r = diff.norm();
  if (r <= kCoincident) throw DomainError("coincident UAV positions");
  return (va - vb).dot(diff) / r;
}

}  // namespace

double red_distance(const Vec3& p_i, const Vec3& p_j, const Vec3& p_k) {
  const double jk = checked_distance(p_j, p_k);
  const double ki = checked_distance(p_k, p_i);
  const double ij = checked_distance(p_i, p_j);
  return jk + ki - ij;
}

double radial_velocity(const std::vector<Vec3>& p, const std::vector<Vec3>& v, std::size_t i,
                       std::size_t j, std::size_t k) {
  if (k == j) return range_rate(p[j], p[i], v[j], v[i]);
  return range_rate(p[j], p[k], v[j], v[k]) + range_rate(p[k], p[i], v[k], v[i]);
}

double radial_velocity(const SwarmState& swarm, std::size_t i, std::size_t j, std::size_t k) {
  const auto& a = swarm[i];
  const auto& b = swarm[j];
  const auto& c = swarm[k];
  if (k == j) return range_rate(b.position, a.position, b.velocity, a.velocity);
  return range_rate(b.position, c.position, b.velocity, c.velocity) +
         range_rate(c.position, a.position, c.velocity, a.velocity);
}

double quantize(double value, double step) {
  // std::round rounds halfway cases away from zero.
  return std::round(value / step) * step;
}

ChannelLists::ChannelLists(std::size_t n)
    : n_(n), d_(n * n * (n == 0 ? 0 : n - 1), 0.0), v_(d_.size(), 0.0) {}

ChannelLists ChannelLists::relabeled(const std::vector<std::size_t>& perm) const {
  ChannelLists out(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (i == j) continue;
      for (std::size_t m = 0; m + 1 < n_; ++m) {
        out.distance(perm[i], perm[j], m) = distance(i, j, m);
        out.velocity(perm[i], perm[j], m) = velocity(i, j, m);
      }
    }
  }
  return out;
}

AssignmentMaps::AssignmentMaps(std::size_t n) : n_(n), idx_(n * n * n, -1) {}

bool AssignmentMaps::is_bijective(std::size_t i, std::size_t j) const {
  std::vector<bool> seen(n_ == 0 ? 0 : n_ - 1, false);
  for (std::size_t k = 0; k < n_; ++k) {
    if (k == i) continue;
    const int m = at(i, j, k);
    if (m < 0 || static_cast<std::size_t>(m) >= seen.size() || seen[static_cast<std::size_t>(m)]) {
      return false;
    }
    seen[static_cast<std::size_t>(m)] = true;
  }
  return true;
}

bool AssignmentMaps::is_bijective() const {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (i != j && !is_bijective(i, j)) return false;
    }
  }
  return true;
}

std::size_t AssignmentMaps::count_differences(const AssignmentMaps& other) const {
  std::size_t diff = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (i == j) continue;
      for (std::size_t k = 0; k < n_; ++k) {
        if (k != i && at(i, j, k) != other.at(i, j, k)) ++diff;
      }
    }
  }
  return diff;
}

OtfsGrid MeasurementSet::likelihood_grid() const {
  if (noise != NoiseModel::noiseless) return grid;
  OtfsGrid g = grid;
  g.bandwidth_hz /= kNoiselessKernelScale;
  g.frame_s /= kNoiselessKernelScale;
  return g;
}

MeasurementSet build_measurements(const SwarmState& swarm, const OtfsGrid& grid, NoiseModel noise,
                                  std::uint64_t seed) {
  grid.validate();
  const std::size_t n = swarm.size();
  if (n < 3) throw ConfigError("need at least 3 UAVs to form reflected paths");

  const auto p = swarm.positions();
  const auto v = swarm.velocities();
  const double ds = grid.distance_step();
  const double vs = grid.velocity_step();
  const double sigma_d = ds / std::sqrt(12.0);
  const double sigma_v = vs / std::sqrt(12.0);

  Rng rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  MeasurementSet out;
  out.lists = ChannelLists(n);
  out.truth_maps = AssignmentMaps(n);
  out.grid = grid;
  out.noise = noise;

  struct Entry {
    double d;
    double v;
    std::size_t k;
  };
  std::vector<Entry> entries;
  entries.reserve(n - 1);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      entries.clear();
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        double d = k == j ? 0.0 : red_distance(p[i], p[j], p[k]);
        double w = radial_velocity(p, v, i, j, k);
        switch (noise) {
          case NoiseModel::quantized:
            d = quantize(d, ds);
            w = quantize(w, vs);
            break;
          case NoiseModel::gaussian:
            if (k != j) d += sigma_d * unit(rng);
            w += sigma_v * unit(rng);
            break;
          case NoiseModel::noiseless:
            break;
        }
        entries.push_back({d, w, k});
      }
      const bool los_first = noise == NoiseModel::gaussian;
      std::stable_sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
        if (los_first && (a.k == j) != (b.k == j)) return a.k == j;
        if (a.d != b.d) return a.d < b.d;
        return a.k < b.k;
      });
      for (std::size_t m = 0; m < entries.size(); ++m) {
        out.lists.distance(i, j, m) = entries[m].d;
        out.lists.velocity(i, j, m) = entries[m].v;
        out.truth_maps.at(i, j, entries[m].k) = static_cast<int>(m);
      }
    }
  }
  return out;
}

void write_measurements(std::ostream& out, const MeasurementSet& m) {
  const std::size_t n = m.lists.swarm_size();
  out << std::setprecision(17);
  out << "swarmloc-measurements 1\n";
  out << "n " << n << "\n";
  out << "grid " << m.grid.bandwidth_hz << ' ' << m.grid.frame_s << ' ' << m.grid.carrier_hz << ' '
      << m.grid.c << "\n";
  out << "noise " << to_string(m.noise) << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      out << "pair " << i << ' ' << j << "\nd";
      for (std::size_t k = 0; k + 1 < n; ++k) out << ' ' << m.lists.distance(i, j, k);
      out << "\nv";
      for (std::size_t k = 0; k + 1 < n; ++k) out << ' ' << m.lists.velocity(i, j, k);
      out << "\nmap";
      for (std::size_t k = 0; k < n; ++k) out << ' ' << m.truth_maps.at(i, j, k);
      out << "\nend\n";
    }
  }
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty line split at its first token.
  std::istringstream next(const std::string& expected_key) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream fields(line);
      std::string key;
      fields >> key;
      if (key != expected_key) {
        throw ParseError("expected '" + expected_key + "', got '" + key + "'", line_);
      }
      return fields;
    }
    throw ParseError("unexpected end of file, expected '" + expected_key + "'", line_ + 1);
  }

  template <typename T>
  T read(std::istringstream& fields) {
    T value{};
    if (!(fields >> value)) throw ParseError("missing or malformed value", line_);
    return value;
  }

  void expect_eol(std::istringstream& fields) {
    std::string rest;
    if (fields >> rest) throw ParseError("trailing data '" + rest + "'", line_);
  }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

}  // namespace

MeasurementSet read_measurements(std::istream& in) {
  LineReader r(in);
  auto header = r.next("swarmloc-measurements");
  if (r.read<int>(header) != 1) throw ParseError("unsupported format version", 1);

  auto nline = r.next("n");
  const auto n = r.read<std::size_t>(nline);
  if (n < 3) throw ConfigError("measurement file needs n >= 3");

  MeasurementSet m;
  auto g = r.next("grid");
  m.grid.bandwidth_hz = r.read<double>(g);
  m.grid.frame_s = r.read<double>(g);
  m.grid.carrier_hz = r.read<double>(g);
  m.grid.c = r.read<double>(g);
  m.grid.validate();
  auto nz = r.next("noise");
  m.noise = noise_model_from_string(r.read<std::string>(nz));

  m.lists = ChannelLists(n);
  m.truth_maps = AssignmentMaps(n);
  for (std::size_t b = 0; b < n * (n - 1); ++b) {
    auto pl = r.next("pair");
    const auto i = r.read<std::size_t>(pl);
    const auto j = r.read<std::size_t>(pl);
    if (i >= n || j >= n || i == j) throw ConfigError("invalid pair in measurement file");
    auto dl = r.next("d");
    for (std::size_t k = 0; k + 1 < n; ++k) m.lists.distance(i, j, k) = r.read<double>(dl);
    r.expect_eol(dl);
    auto vl = r.next("v");
    for (std::size_t k = 0; k + 1 < n; ++k) m.lists.velocity(i, j, k) = r.read<double>(vl);
    r.expect_eol(vl);
    auto ml = r.next("map");
    for (std::size_t k = 0; k < n; ++k) m.truth_maps.at(i, j, k) = r.read<int>(ml);
    r.expect_eol(ml);
    r.next("end");
  }
  return m;
}

void save_measurements(const std::filesystem::path& path, const MeasurementSet& m) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_measurements(out, m);
}

MeasurementSet load_measurements(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_measurements(in);
}

}  // namespace swarmloc
