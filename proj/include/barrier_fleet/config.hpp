#ifndef BARRIER_FLEET_CONFIG_HPP
#define BARRIER_FLEET_CONFIG_HPP

/**
 * @file
 * @brief JSON scenario configuration.
 *
 * Every key is optional and defaults to the Table I values. Unknown keys are
 * errors, reported with their JSON-pointer location. Schema:
 *
 *     {
 *       "joust": {"circle_diameter", "n_vehicles", "speed_range": [lo, hi],
 *                 "speed_reset_period", "disturbance_range": [lo, hi],
 *                 "legs", "target_encounters", "dt", "seed", "mode",
 *                 "encounter_threshold", "timeout_factor", "randomize_rotation"},
 *       "vehicle_defaults": {"gamma", "r_safe", "thr_min", "thr_max", "rud_min",
 *                            "rud_max", "rudder_gate_threshold", "policy"},
 *       "vehicles": [ {same keys as vehicle_defaults}, ... ],   // per-index overrides
 *       "barrier": {"alpha_gain"},
 *       "colregs": {"pwt_outer_dist", "pwt_inner_dist", "min_util_cpa_dist",
 *                   "max_util_cpa_dist", "time_horizon"},
 *       "qp": {"q_thr", "q_rud", "slack_penalty"},               // omit for gamma-based weights
 *       "controller": {"heading_gain", "capture_radius"},
 *       "flags": {"rudder_gate_model", "unknown_heading_fallback"},
 *       "output": {"dir", "trajectory_legs",
 *                  "grid": {"range_bin", "bearing_bin_deg", "max_range"}}
 *     }
 */

#include "barrier_fleet/sim.hpp"

#include "json.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace barrier_fleet {

class ConfigError : public std::runtime_error
{
public:
  ConfigError(std::string pointer, const std::string& message);
  const std::string& pointer() const { return pointer_; }

private:
  std::string pointer_;
};

struct GridConfig
{
  double range_bin = 0.1;
  double bearing_bin_deg = 1.0;
  double max_range = 32.0;
};

inline constexpr const char* kRudderGateModel = "linear_ramp_v1";

struct ScenarioConfig
{
  Scenario scenario = Scenario::defaults(4);
  std::string output_dir = "out";
  int trajectory_legs = 1;
  GridConfig grid{};
  std::string rudder_gate_model = kRudderGateModel;

  std::vector<std::string> warnings() const;
};

/// Raw document, for callers that patch keys before parsing. Throws
/// ConfigError if the file is unreadable or not JSON.
nlohmann::json read_document(const std::string& path);
nlohmann::json parse_document(const std::string& text);

/// Throws ConfigError on malformed input, unknown keys or invalid values.
ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Re-validates after programmatic edits (CLI overrides).
void validate(const ScenarioConfig& config);

/// Effective configuration, every key spelled out.
nlohmann::json to_json(const ScenarioConfig& config);

}  // namespace barrier_fleet

#endif
