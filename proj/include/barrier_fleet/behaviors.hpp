#ifndef BARRIER_FLEET_BEHAVIORS_HPP
#define BARRIER_FLEET_BEHAVIORS_HPP

/**
 * @file
 * @brief Nominal controllers: waypoint tracking and a simplified COLREGS
 * avoidance behavior combined by weighted maximization over a grid of
 * (heading, speed) candidates.
 */

#include "barrier_fleet/cbf.hpp"
#include "barrier_fleet/dynamics.hpp"

#include <vector>

namespace barrier_fleet {

struct WaypointGoal
{
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
  double desired_speed = 1.5;
  double capture_radius = 2.0;
};

struct ColregsParams
{
  double pwt_outer_dist = 30.0;
  double pwt_inner_dist = 20.0;
  double min_util_cpa_dist = 10.0;
  double max_util_cpa_dist = 20.0;
  double time_horizon = 60.0;
};

struct CandidateGrid
{
  std::vector<double> headings;  ///< absolute, radians
  std::vector<double> speeds;    ///< m/s

  /// 72 headings at 5 degrees, 11 speeds from 0 to thr_max.
  static CandidateGrid standard(double thr_max);
};

struct Cpa
{
  double distance = 0.0;
  double time = 0.0;
};

/// Closest approach of two constant-velocity tracks, time clipped to [0, horizon].
Cpa cpa(const Eigen::Vector2d& ego_pos, const Eigen::Vector2d& ego_vel,
        const Eigen::Vector2d& contact_pos, const Eigen::Vector2d& contact_vel, double horizon);

enum class EncounterRole { HeadOn, CrossingGiveWay, Overtaking, StandOn };

/// Role of the ego toward a contact given the contact's heading.
EncounterRole classify_role(const VehicleState& ego, const VehicleState& contact);

/// A contact as seen by a behavior: pose, bounds and a velocity estimate.
struct TrackedContact
{
  ContactView view;
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
};

struct Candidate
{
  double heading = 0.0;
  double speed = 0.0;
};

double transit_utility(const Candidate& candidate, const VehicleState& ego, const WaypointGoal& goal);

/// CPA ramp in [0, 1] times a passing-side bias for give-way roles.
double colregs_utility(const Candidate& candidate, const VehicleState& ego, const TrackedContact& contact,
                       const ColregsParams& params);

/// Priority weight of a contact at the given range: 0 beyond pwt_outer_dist,
/// 1 inside pwt_inner_dist, linear between.
double priority_weight(double range, const ColregsParams& params);

ControlInput waypoint_control(const VehicleState& ego, const WaypointGoal& goal, double heading_gain,
                              const VehicleSpec& spec);

/// Converts a (heading, speed) candidate to an input via the waypoint law.
ControlInput track_candidate(const Candidate& candidate, const VehicleState& ego, const WaypointGoal& goal,
                             double heading_gain, const VehicleSpec& spec);

struct BlendDecision
{
  ControlInput u{};
  Candidate chosen{};
  bool used_grid = false;   ///< false when no contact carried weight
  double transit_score = 0.0;
  double total_score = 0.0;
};

BlendDecision blend_detailed(const VehicleState& ego, const VehicleSpec& spec, const WaypointGoal& goal,
                             const std::vector<TrackedContact>& contacts, const ColregsParams& params,
                             const CandidateGrid& grid, double heading_gain);

ControlInput blend(const VehicleState& ego, const VehicleSpec& spec, const WaypointGoal& goal,
                   const std::vector<TrackedContact>& contacts, const ColregsParams& params,
                   const CandidateGrid& grid, double heading_gain);

}  // namespace barrier_fleet

#endif
