#include "barrier_fleet/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace barrier_fleet {

using nlohmann::json;

ConfigError::ConfigError(std::string pointer, const std::string& message)
  : std::runtime_error((pointer.empty() ? std::string("/") : pointer) + ": " + message), pointer_(std::move(pointer))
{
}

namespace {

std::string describe(const json& value)
{
  return std::string(value.type_name());
}

// One JSON object being read. Every key must be claimed before finish().
class Section
{
public:
  Section(const json& node, std::string pointer) : node_(node), pointer_(std::move(pointer))
  {
    if (!node_.is_object()) throw ConfigError(pointer_, "expected an object, got " + describe(node_));
  }

  std::string at(const std::string& key) const { return pointer_ + "/" + key; }

  const json* find(const std::string& key)
  {
    const auto it = node_.find(key);
    if (it == node_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void number(const std::string& key, double& out)
  {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(at(key), "expected a number, got " + describe(*v));
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(at(key), "must be finite");
    }
  }

  void integer(const std::string& key, int& out)
  {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer, got " + describe(*v));
      const auto wide = v->get<std::int64_t>();
      if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max()) {
        throw ConfigError(at(key), "integer out of range");
      }
      out = static_cast<int>(wide);
    }
  }

  void count(const std::string& key, std::uint64_t& out)
  {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(at(key), "expected a non-negative integer, got " + describe(*v));
      out = v->get<std::uint64_t>();
    }
  }

  void flag(const std::string& key, bool& out)
  {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(at(key), "expected a boolean, got " + describe(*v));
      out = v->get<bool>();
    }
  }

  void text(const std::string& key, std::string& out)
  {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(at(key), "expected a string, got " + describe(*v));
      out = v->get<std::string>();
    }
  }

  void pair(const std::string& key, std::array<double, 2>& out)
  {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
        throw ConfigError(at(key), "expected [lo, hi]");
      }
      out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
      if (!(std::isfinite(out[0]) && std::isfinite(out[1]))) throw ConfigError(at(key), "must be finite");
      if (out[0] > out[1]) throw ConfigError(at(key), "lo must not exceed hi");
    }
  }

  void finish() const
  {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.contains(key)) throw ConfigError(at(key), "unknown key");
    }
  }

private:
  const json& node_;
  std::string pointer_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& pointer, const std::string& message)
{
  if (!ok) throw ConfigError(pointer, message);
}

void read_vessel(Section& s, VesselConfig& v)
{
  s.number("gamma", v.spec.gamma);
  s.number("r_safe", v.spec.r_safe);
  s.number("thr_min", v.spec.bounds.thr_min);
  s.number("thr_max", v.spec.bounds.thr_max);
  s.number("rud_min", v.spec.bounds.rud_min);
  s.number("rud_max", v.spec.bounds.rud_max);
  s.number("rudder_gate_threshold", v.spec.rudder_gate_threshold);
  std::string policy = to_string(v.policy);
  s.text("policy", policy);
  try {
    v.policy = policy_from_string(policy);
  } catch (const std::invalid_argument&) {
    throw ConfigError(s.at("policy"), "unknown policy '" + policy + "'");
  }
  s.finish();
}

void check_vessel(const VesselConfig& v, const std::string& pointer)
{
  require(v.spec.bounds.thr_min >= 0.0 && v.spec.bounds.rud_min >= 0.0, pointer,
          "thr_min and rud_min are magnitudes and must be >= 0");
  try {
    validate(v.spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(pointer, e.what());
  }
}

}  // namespace

ScenarioConfig parse_config(const json& doc)
{
  ScenarioConfig cfg;
  Section root(doc, "");
  auto& sc = cfg.scenario;
  auto& j = sc.joust;

  if (const json* node = root.find("joust")) {
    Section s(*node, "/joust");
    s.number("circle_diameter", j.circle_diameter);
    s.integer("n_vehicles", j.n_vehicles);
    s.pair("speed_range", j.speed_range);
    s.number("speed_reset_period", j.speed_reset_period);
    s.pair("disturbance_range", j.disturbance_range);
    s.integer("legs", j.n_legs);
    std::uint64_t target = j.target_encounters;
    s.count("target_encounters", target);
    j.target_encounters = static_cast<std::size_t>(target);
    s.number("dt", j.dt);
    s.count("seed", j.seed);
    std::string mode = to_string(j.mode);
    s.text("mode", mode);
    try {
      j.mode = mode_from_string(mode);
    } catch (const std::invalid_argument&) {
      throw ConfigError("/joust/mode", "unknown mode '" + mode + "'");
    }
    s.number("encounter_threshold", j.encounter_threshold);
    s.number("timeout_factor", j.timeout_factor);
    s.flag("randomize_rotation", j.randomize_rotation);
    s.finish();
  }
  require(j.n_vehicles >= 1, "/joust/n_vehicles", "must be >= 1");

  VesselConfig base;
  if (const json* node = root.find("vehicle_defaults")) {
    Section s(*node, "/vehicle_defaults");
    read_vessel(s, base);
  }
  sc.vessels.assign(static_cast<std::size_t>(j.n_vehicles), base);

  if (const json* node = root.find("vehicles")) {
    require(node->is_array(), "/vehicles", "expected an array");
    require(node->size() <= sc.vessels.size(), "/vehicles", "more entries than joust.n_vehicles");
    for (std::size_t i = 0; i < node->size(); ++i) {
      Section s((*node)[i], "/vehicles/" + std::to_string(i));
      read_vessel(s, sc.vessels[i]);
    }
  }

  if (const json* node = root.find("barrier")) {
    Section s(*node, "/barrier");
    s.number("alpha_gain", sc.params.barrier.alpha_gain);
    s.finish();
  }
  sc.params.barrier.r_safe = base.spec.r_safe;

  if (const json* node = root.find("colregs")) {
    Section s(*node, "/colregs");
    auto& c = sc.params.colregs;
    s.number("pwt_outer_dist", c.pwt_outer_dist);
    s.number("pwt_inner_dist", c.pwt_inner_dist);
    s.number("min_util_cpa_dist", c.min_util_cpa_dist);
    s.number("max_util_cpa_dist", c.max_util_cpa_dist);
    s.number("time_horizon", c.time_horizon);
    s.finish();
  }

  if (const json* node = root.find("qp")) {
    Section s(*node, "/qp");
    QpWeights w = QpWeights::for_gamma(base.spec.gamma);
    s.number("q_thr", w.q_thr);
    s.number("q_rud", w.q_rud);
    w.slack_penalty = 1e6 * std::max(w.q_thr, w.q_rud);
    s.number("slack_penalty", w.slack_penalty);
    s.finish();
    sc.params.weights = w;
  }

  if (const json* node = root.find("controller")) {
    Section s(*node, "/controller");
    s.number("heading_gain", sc.params.heading_gain);
    s.number("capture_radius", sc.params.capture_radius);
    s.finish();
  }

  if (const json* node = root.find("flags")) {
    Section s(*node, "/flags");
    s.text("rudder_gate_model", cfg.rudder_gate_model);
    s.flag("unknown_heading_fallback", sc.params.unknown_heading_fallback);
    s.finish();
  }

  if (const json* node = root.find("output")) {
    Section s(*node, "/output");
    s.text("dir", cfg.output_dir);
    s.integer("trajectory_legs", cfg.trajectory_legs);
    if (const json* grid = s.find("grid")) {
      Section g(*grid, "/output/grid");
      g.number("range_bin", cfg.grid.range_bin);
      g.number("bearing_bin_deg", cfg.grid.bearing_bin_deg);
      g.number("max_range", cfg.grid.max_range);
      g.finish();
    }
    s.finish();
  }
  root.finish();

  validate(cfg);
  return cfg;
}

void validate(const ScenarioConfig& cfg)
{
  const auto& sc = cfg.scenario;
  const auto& j = sc.joust;
  require(j.n_vehicles >= 1, "/joust/n_vehicles", "must be >= 1");
  require(sc.vessels.size() == static_cast<std::size_t>(j.n_vehicles), "/vehicles",
          "vessel list does not match joust.n_vehicles");
  require(j.circle_diameter > 0.0, "/joust/circle_diameter", "must be > 0");
  require(j.speed_range[0] > 0.0, "/joust/speed_range", "speeds must be > 0");
  require(j.speed_reset_period > 0.0, "/joust/speed_reset_period", "must be > 0");
  require(j.disturbance_range[0] >= 0.0, "/joust/disturbance_range", "must be >= 0");
  require(j.n_legs >= 0, "/joust/legs", "must be >= 0");
  require(j.n_legs > 0 || j.target_encounters > 0, "/joust/target_encounters", "must be > 0 when legs is 0");
  require(j.dt > 0.0, "/joust/dt", "must be > 0");
  require(j.encounter_threshold > 0.0, "/joust/encounter_threshold", "must be > 0");
  require(j.timeout_factor >= 1.0, "/joust/timeout_factor", "must be >= 1");

  for (std::size_t i = 0; i < sc.vessels.size(); ++i) {
    const auto& v = sc.vessels[i];
    check_vessel(v, "/vehicles/" + std::to_string(i));
    require(j.speed_range[1] <= v.spec.bounds.thr_max, "/joust/speed_range",
            "upper speed exceeds thr_max of vessel " + std::to_string(i));
  }

  require(sc.params.barrier.alpha_gain > 0.0, "/barrier/alpha_gain", "must be > 0");
  require(sc.params.barrier.alpha_gain * j.dt < 1.0, "/barrier/alpha_gain",
          "alpha_gain * dt must be < 1 for the discrete barrier to stay invariant");
  const auto& c = sc.params.colregs;
  require(c.pwt_inner_dist < c.pwt_outer_dist, "/colregs", "pwt_inner_dist must be < pwt_outer_dist");
  require(c.min_util_cpa_dist < c.max_util_cpa_dist, "/colregs", "min_util_cpa_dist must be < max_util_cpa_dist");
  require(c.pwt_inner_dist >= 0.0 && c.min_util_cpa_dist >= 0.0, "/colregs", "distances must be >= 0");
  require(c.time_horizon > 0.0, "/colregs/time_horizon", "must be > 0");
  if (sc.params.weights) {
    const auto& w = *sc.params.weights;
    require(w.q_thr > 0.0 && w.q_rud > 0.0 && w.slack_penalty > 0.0, "/qp", "weights must be > 0");
  }
  require(sc.params.heading_gain > 0.0, "/controller/heading_gain", "must be > 0");
  require(sc.params.capture_radius > 0.0, "/controller/capture_radius", "must be > 0");
  require(cfg.rudder_gate_model == kRudderGateModel, "/flags/rudder_gate_model",
          std::string("only '") + kRudderGateModel + "' is implemented");
  require(!cfg.output_dir.empty(), "/output/dir", "must not be empty");
  require(cfg.trajectory_legs >= 0, "/output/trajectory_legs", "must be >= 0");
  require(cfg.grid.range_bin > 0.0 && cfg.grid.bearing_bin_deg > 0.0 && cfg.grid.max_range > 0.0, "/output/grid",
          "bin sizes and max_range must be > 0");
}

json parse_document(const std::string& text)
{
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
}

json read_document(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_document(buf.str());
}

ScenarioConfig parse_config_text(const std::string& text)
{
  return parse_config(parse_document(text));
}

ScenarioConfig load_config(const std::string& path)
{
  return parse_config(read_document(path));
}

std::vector<std::string> ScenarioConfig::warnings() const
{
  std::vector<std::string> out;
  for (std::size_t i = 0; i < scenario.vessels.size(); ++i) {
    for (const auto& w : spec_warnings(scenario.vessels[i].spec)) out.push_back("vessel " + std::to_string(i) + ": " + w);
  }
  return out;
}

namespace {

json vessel_json(const VesselConfig& v)
{
  return {{"gamma", v.spec.gamma},
          {"r_safe", v.spec.r_safe},
          {"thr_min", v.spec.bounds.thr_min},
          {"thr_max", v.spec.bounds.thr_max},
          {"rud_min", v.spec.bounds.rud_min},
          {"rud_max", v.spec.bounds.rud_max},
          {"rudder_gate_threshold", v.spec.rudder_gate_threshold},
          {"policy", to_string(v.policy)}};
}

}  // namespace

json to_json(const ScenarioConfig& cfg)
{
  const auto& sc = cfg.scenario;
  const auto& j = sc.joust;
  json vehicles = json::array();
  for (const auto& v : sc.vessels) vehicles.push_back(vessel_json(v));
  json out = {
      {"joust",
       {{"circle_diameter", j.circle_diameter},
        {"n_vehicles", j.n_vehicles},
        {"speed_range", j.speed_range},
        {"speed_reset_period", j.speed_reset_period},
        {"disturbance_range", j.disturbance_range},
        {"legs", j.n_legs},
        {"target_encounters", j.target_encounters},
        {"dt", j.dt},
        {"seed", j.seed},
        {"mode", to_string(j.mode)},
        {"encounter_threshold", j.encounter_threshold},
        {"timeout_factor", j.timeout_factor},
        {"randomize_rotation", j.randomize_rotation}}},
      {"vehicles", vehicles},
      {"barrier", {{"alpha_gain", sc.params.barrier.alpha_gain}}},
      {"colregs",
       {{"pwt_outer_dist", sc.params.colregs.pwt_outer_dist},
        {"pwt_inner_dist", sc.params.colregs.pwt_inner_dist},
        {"min_util_cpa_dist", sc.params.colregs.min_util_cpa_dist},
        {"max_util_cpa_dist", sc.params.colregs.max_util_cpa_dist},
        {"time_horizon", sc.params.colregs.time_horizon}}},
      {"controller", {{"heading_gain", sc.params.heading_gain}, {"capture_radius", sc.params.capture_radius}}},
      {"flags",
       {{"rudder_gate_model", cfg.rudder_gate_model},
        {"unknown_heading_fallback", sc.params.unknown_heading_fallback}}},
      {"output",
       {{"dir", cfg.output_dir},
        {"trajectory_legs", cfg.trajectory_legs},
        {"grid",
         {{"range_bin", cfg.grid.range_bin},
          {"bearing_bin_deg", cfg.grid.bearing_bin_deg},
          {"max_range", cfg.grid.max_range}}}}}};
  if (sc.params.weights) {
    out["qp"] = {{"q_thr", sc.params.weights->q_thr},
                 {"q_rud", sc.params.weights->q_rud},
                 {"slack_penalty", sc.params.weights->slack_penalty}};
  }
  return out;
}

}  // namespace barrier_fleet
