#ifndef BARRIER_FLEET_SIM_HPP
#define BARRIER_FLEET_SIM_HPP

/**
 * @file
 * @brief Joust-mission simulation.
 *
 * Vessels start evenly spaced on a circle and cross to antipodal goals at the
 * same time. Each tick every vessel observes the others' previous-tick poses,
 * computes a nominal input (waypoint or COLREGS blend), optionally passes it
 * through the safety filter, and integrates. Updates are synchronous.
 *
 * Randomness is drawn from a per-leg stream derived from (seed, leg index),
 * so a leg is reproducible on its own and campaigns can be sharded freely.
 */

#include "barrier_fleet/behaviors.hpp"
#include "barrier_fleet/cbf.hpp"
#include "barrier_fleet/dynamics.hpp"
#include "barrier_fleet/qp_filter.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace barrier_fleet {

enum class Mode { ColregsOnly, CbfOnly, ColregsPlusCbf };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);  ///< throws std::invalid_argument
bool uses_behaviors(Mode mode);
bool uses_filter(Mode mode);

enum class Policy
{
  Autonomous,    ///< behavior + filter per mode
  StraightLine,  ///< waypoint law only, ignores everyone
  External,      ///< commands supplied from outside (gateway)
  WorstCase,     ///< argmin of its own contribution to dh/dt toward the nearest vessel
};

std::string to_string(Policy policy);
Policy policy_from_string(const std::string& name);  ///< throws std::invalid_argument

struct VesselConfig
{
  VehicleSpec spec{};
  Policy policy = Policy::Autonomous;
};

struct JoustConfig
{
  double circle_diameter = 64.0;
  int n_vehicles = 4;
  std::array<double, 2> speed_range{1.0, 2.0};
  double speed_reset_period = 100.0;
  std::array<double, 2> disturbance_range{0.01, 0.02};
  int n_legs = 0;                   ///< > 0: run exactly this many legs
  std::size_t target_encounters = 5000;  ///< used when n_legs == 0
  double dt = 0.1;
  std::uint64_t seed = 0;
  Mode mode = Mode::ColregsPlusCbf;
  double encounter_threshold = 32.0;
  double timeout_factor = 4.0;
  bool randomize_rotation = true;   ///< random rotation of the spawn pattern per leg
};

struct SimParams
{
  BarrierParams barrier{};
  ColregsParams colregs{};
  std::optional<QpWeights> weights;  ///< unset: QpWeights::for_gamma per vessel
  double heading_gain = 1.0;
  double capture_radius = 2.0;
  bool unknown_heading_fallback = false;
};

struct Scenario
{
  JoustConfig joust{};
  std::vector<VesselConfig> vessels;  ///< size == joust.n_vehicles
  SimParams params{};

  /// Table I defaults with n identical autonomous vessels.
  static Scenario defaults(int n_vehicles = 4);
  QpWeights weights_for(std::size_t vessel) const;
};

struct VesselStart
{
  VehicleState pose{};
  WaypointGoal goal{};
  std::vector<double> speed_schedule;  ///< nominal speed per reset period
  Eigen::Vector2d disturbance = Eigen::Vector2d::Zero();
};

struct LegPlan
{
  int leg_index = 0;
  std::vector<VesselStart> vessels;
};

/// Deterministic 64-bit stream for (seed, leg index).
std::uint64_t leg_stream_seed(std::uint64_t seed, std::uint64_t leg_index);

LegPlan spawn_leg(const Scenario& scenario, int leg_index);

struct TrackSample
{
  double range = 0.0;
  double bearing = 0.0;  ///< contact bearing relative to the viewer's heading, (-pi, pi]
  double t = 0.0;
};

struct EncounterRecord
{
  std::pair<int, int> vehicle_pair{0, 0};  ///< first < second
  int leg_index = 0;
  double min_range = 0.0;
  std::vector<TrackSample> relative_track;  ///< second as seen from first
  std::vector<TrackSample> reverse_track;   ///< first as seen from second
  std::array<double, 2> leg_time{0.0, 0.0};
  std::array<double, 2> leg_distance{0.0, 0.0};
};

struct LegStats
{
  int leg_index = 0;
  int vehicle_id = 0;
  double time = 0.0;
  double distance = 0.0;
  double baseline_time = 0.0;
  double baseline_distance = 0.0;
  bool timed_out = false;
};

/// One trajectory-log row.
struct TrajectoryRow
{
  double t = 0.0;
  int vehicle_id = 0;
  VehicleState state{};
  ControlInput u_nom{};
  ControlInput u_safe{};
  double slack_total = 0.0;
  double min_h = 0.0;
};

struct ConstraintSnapshot
{
  int ego = 0;
  int contact = 0;
  double h = 0.0;
};

struct VesselTick
{
  ControlInput u_nom{};
  ControlInput u_safe{};   ///< after filter
  ControlInput u_applied{};  ///< after clamp, what was integrated
  double slack_total = 0.0;
  double min_h = 0.0;
  bool filtered = false;
  bool slacked = false;
};

/// Stepwise simulator over one leg plan. Also drives the real-time gateway.
class FleetSim
{
public:
  FleetSim(const Scenario& scenario, LegPlan plan);

  /// Advances one tick. `external` supplies inputs for External vessels
  /// (missing entries mean zero input).
  void tick(const std::function<std::optional<ControlInput>(int)>& external = {});

  double time() const { return time_; }
  const std::vector<VehicleState>& states() const { return states_; }
  const std::vector<VesselTick>& last_tick() const { return last_; }
  const std::vector<ConstraintSnapshot>& constraints() const { return constraints_; }
  const LegPlan& plan() const { return plan_; }
  bool arrived(int vessel) const { return arrived_[static_cast<std::size_t>(vessel)]; }
  bool all_arrived() const;
  double arrival_time(int vessel) const { return arrival_time_[static_cast<std::size_t>(vessel)]; }
  double distance(int vessel) const { return distance_[static_cast<std::size_t>(vessel)]; }
  double nominal_speed(int vessel) const;

private:
  ControlInput nominal(std::size_t i, const std::vector<ContactView>& contacts,
                       const std::function<std::optional<ControlInput>(int)>& external) const;

  const Scenario& scenario_;
  LegPlan plan_;
  double time_ = 0.0;
  std::vector<VehicleState> states_;
  std::vector<VehicleState> previous_;
  std::vector<bool> arrived_;
  std::vector<double> arrival_time_;
  std::vector<double> distance_;
  std::vector<VesselTick> last_;
  std::vector<ConstraintSnapshot> constraints_;
};

struct LegResult
{
  int leg_index = 0;
  std::vector<EncounterRecord> encounters;
  std::vector<LegStats> stats;
  std::vector<TrajectoryRow> trajectory;  ///< empty unless requested
  bool timed_out = false;
  double duration = 0.0;
  std::size_t filtered_ticks = 0;
  std::size_t slacked_ticks = 0;
};

/// Straight-line crossing of one vessel alone: (time, distance).
std::pair<double, double> baseline_traversal(const Scenario& scenario, const LegPlan& plan, int vessel);

LegResult run_leg(const Scenario& scenario, const LegPlan& plan, bool record_trajectory = false);

struct CampaignResult
{
  std::vector<EncounterRecord> records;
  std::vector<LegStats> leg_stats;
  std::vector<LegResult> logged_legs;  ///< legs with trajectories, if requested
  int legs_run = 0;
  int timeouts = 0;
  std::size_t filtered_ticks = 0;
  std::size_t slacked_ticks = 0;
};

struct CampaignOptions
{
  int workers = 0;             ///< 0: BARRIER_FLEET_THREADS or hardware concurrency
  int trajectory_legs = 0;     ///< record trajectories for the first N legs
  int max_legs = 1000000;      ///< hard stop for encounter-count campaigns
};

/// Worker count from BARRIER_FLEET_THREADS (if set) capped at hardware concurrency.
int default_workers();

CampaignResult run_campaign(const Scenario& scenario, const CampaignOptions& options = {});

}  // namespace barrier_fleet

#endif
