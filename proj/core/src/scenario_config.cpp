#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "swarmloc/errors.hpp"
#include "swarmloc/experiments.hpp"

namespace swarmloc {

namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key " + where(it.key()));
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("bad value for " + where(key) + ": " + e.what());
    }
  }

  void get_vec3(const char* key, Vec3& out) {
    std::vector<double> v;
    get(key, v);
    if (obj_.contains(key)) {
      if (v.size() != 3) throw ConfigError(where(key) + " must have 3 components");
      out = Vec3(v[0], v[1], v[2]);
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_bp(const json& j, BpConfig& bp) {
  Reader r(j, "tip.bp");
  r.get("iterations", bp.iterations);
  r.get("use_doppler_checks", bp.use_doppler_checks);
  r.get("damping", bp.damping);
  r.get("message_floor", bp.message_floor);
}

void read_gd(const json& j, GdConfig& gd) {
  Reader r(j, "tip.gd");
  r.get("epsilon", gd.epsilon);
  r.get("max_iterations", gd.max_iterations);
  r.get("beta", gd.beta);
  r.get("max_restarts", gd.max_restarts);
  std::string rule = gd.step_rule == StepRule::constant ? "constant" : "barzilai_borwein";
  r.get("step_rule", rule);
  if (rule == "constant") {
    gd.step_rule = StepRule::constant;
  } else if (rule == "barzilai_borwein") {
    gd.step_rule = StepRule::barzilai_borwein;
  } else {
    throw ConfigError("unknown step rule '" + rule + "'");
  }
  r.get("gamma0", gd.gamma0);
  r.get("gamma_min", gd.gamma_min);
  r.get("gamma_max", gd.gamma_max);
}

void read_tip(const json& j, TipConfig& tip) {
  Reader r(j, "tip");
  if (const json* bp = r.child("bp")) read_bp(*bp, tip.bp);
  if (const json* gd = r.child("gd")) read_gd(*gd, tip.gd);
  r.get("dt", tip.dt);
  r.get("tracking_restart_std", tip.tracking_restart_std);
}

void read_swarm(const json& j, RandomSwarmParams& s) {
  Reader r(j, "swarm");
  r.get("n", s.n);
  r.get("pos_mean", s.pos_mean);
  r.get("pos_std", s.pos_std);
  r.get("vel_std", s.vel_std);
  std::vector<std::vector<double>> anchors;
  r.get("anchors", anchors);
  if (j.contains("anchors")) {
    s.anchor_positions.clear();
    for (const auto& a : anchors) {
      if (a.size() != 3) throw ConfigError("swarm.anchors entries must have 3 components");
      s.anchor_positions.emplace_back(a[0], a[1], a[2]);
    }
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  {
    Reader r(j, "config");
    if (const json* s = r.child("swarm")) read_swarm(*s, cfg.swarm);
    r.get("bandwidths_hz", cfg.bandwidths_hz);
    r.get("frames_s", cfg.frames_s);
    r.get("carrier_hz", cfg.carrier_hz);
    r.get("c", cfg.c);
    r.get("turbo_iterations", cfg.turbo_iterations);
    r.get("bp_iterations", cfg.bp_iterations);
    r.get("gd_iterations", cfg.gd_iterations);
    std::vector<std::string> modes;
    r.get("modes", modes);
    if (j.contains("modes")) {
      cfg.modes.clear();
      for (const auto& m : modes) cfg.modes.push_back(tip_mode_from_string(m));
    }
    std::string noise = to_string(cfg.noise);
    r.get("noise", noise);
    cfg.noise = noise_model_from_string(noise);
    if (const json* t = r.child("tip")) read_tip(*t, cfg.tip);
    r.get("with_crlb", cfg.with_crlb);
    r.get("crlb_samples", cfg.crlb_samples);
    r.get("runs", cfg.runs);
    r.get("seed", cfg.seed);
    r.get("threads", cfg.threads);
    r.get("epochs", cfg.epochs);
    r.get("lissajous_amplitude", cfg.lissajous_amplitude);
    r.get("lissajous_rate", cfg.lissajous_rate);
    r.get_vec3("lissajous_center", cfg.lissajous_center);
    r.get("trace_path", cfg.trace_path);
    r.get("trace_cube_side", cfg.trace_cube_side);
    r.get("output", cfg.output);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json anchors = json::array();
  for (const auto& a : cfg.swarm.anchor_positions) anchors.push_back({a.x(), a.y(), a.z()});
  json modes = json::array();
  for (TipMode m : cfg.modes) modes.push_back(to_string(m));
  const auto& gd = cfg.tip.gd;
  const auto& bp = cfg.tip.bp;
  json j = {
      {"swarm",
       {{"n", cfg.swarm.n},
        {"pos_mean", cfg.swarm.pos_mean},
        {"pos_std", cfg.swarm.pos_std},
        {"vel_std", cfg.swarm.vel_std},
        {"anchors", anchors}}},
      {"bandwidths_hz", cfg.bandwidths_hz},
      {"frames_s", cfg.frames_s},
      {"carrier_hz", cfg.carrier_hz},
      {"c", cfg.c},
      {"turbo_iterations", cfg.turbo_iterations},
      {"bp_iterations", cfg.bp_iterations},
      {"gd_iterations", cfg.gd_iterations},
      {"modes", modes},
      {"noise", to_string(cfg.noise)},
      {"tip",
       {{"bp",
         {{"iterations", bp.iterations},
          {"use_doppler_checks", bp.use_doppler_checks},
          {"damping", bp.damping},
          {"message_floor", bp.message_floor}}},
        {"gd",
         {{"epsilon", gd.epsilon},
          {"max_iterations", gd.max_iterations},
          {"beta", gd.beta},
          {"max_restarts", gd.max_restarts},
          {"step_rule", gd.step_rule == StepRule::constant ? "constant" : "barzilai_borwein"},
          {"gamma0", gd.gamma0},
          {"gamma_min", gd.gamma_min},
          {"gamma_max", gd.gamma_max}}},
        {"dt", cfg.tip.dt},
        {"tracking_restart_std", cfg.tip.tracking_restart_std}}},
      {"with_crlb", cfg.with_crlb},
      {"crlb_samples", cfg.crlb_samples},
      {"runs", cfg.runs},
      {"seed", cfg.seed},
      {"threads", cfg.threads},
      {"epochs", cfg.epochs},
      {"lissajous_amplitude", cfg.lissajous_amplitude},
      {"lissajous_rate", cfg.lissajous_rate},
      {"lissajous_center",
       {cfg.lissajous_center.x(), cfg.lissajous_center.y(), cfg.lissajous_center.z()}},
      {"trace_path", cfg.trace_path},
      {"trace_cube_side", cfg.trace_cube_side},
      {"output", cfg.output}};
  return j.dump(2);
}

}  // namespace swarmloc
