#include "barrier_fleet/behaviors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace barrier_fleet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

constexpr double kHeadOnBearing = 15.0 * kDeg;
constexpr double kHeadOnReciprocal = 22.5 * kDeg;
constexpr double kBeamAft = 112.5 * kDeg;

constexpr double kPreferredSideBias = 1.0;
constexpr double kOtherSideBias = 0.75;

double bearing_to(const VehicleState& from, const Eigen::Vector2d& to)
{
  return std::atan2(to.y() - from.y, to.x() - from.x);
}

}  // namespace

CandidateGrid CandidateGrid::standard(double thr_max)
{
  CandidateGrid grid;
  for (int k = 0; k < 72; ++k) grid.headings.push_back(wrap_angle(k * 5.0 * kDeg));
  for (int k = 0; k <= 10; ++k) grid.speeds.push_back(thr_max * k / 10.0);
  return grid;
}

Cpa cpa(const Eigen::Vector2d& ego_pos, const Eigen::Vector2d& ego_vel,
        const Eigen::Vector2d& contact_pos, const Eigen::Vector2d& contact_vel, double horizon)
{
  const Eigen::Vector2d dp = contact_pos - ego_pos;
  const Eigen::Vector2d dv = contact_vel - ego_vel;
  const double speed2 = dv.squaredNorm();
  double t = 0.0;
  if (speed2 > 1e-12) t = std::clamp(-dp.dot(dv) / speed2, 0.0, horizon);
  return {(dp + t * dv).norm(), t};
}

EncounterRole classify_role(const VehicleState& ego, const VehicleState& contact)
{
  const double rel_bearing = wrap_angle(bearing_to(ego, contact.position()) - ego.theta);
  const double reciprocal = wrap_angle(contact.theta - ego.theta - kPi);
  if (std::abs(rel_bearing) <= kHeadOnBearing && std::abs(reciprocal) <= kHeadOnReciprocal) {
    return EncounterRole::HeadOn;
  }
  const double ego_from_contact = wrap_angle(bearing_to(contact, ego.position()) - contact.theta);
  if (std::abs(ego_from_contact) >= kBeamAft) return EncounterRole::Overtaking;
  if (rel_bearing < 0.0 && rel_bearing >= -kBeamAft) return EncounterRole::CrossingGiveWay;
  return EncounterRole::StandOn;
}

double transit_utility(const Candidate& candidate, const VehicleState& ego, const WaypointGoal& goal)
{
  const double heading_error = std::abs(wrap_angle(candidate.heading - bearing_to(ego, goal.target)));
  const double heading_score = 1.0 - heading_error / kPi;
  const double speed_ref = std::max(goal.desired_speed, 1e-6);
  const double speed_score = std::clamp(1.0 - 0.5 * std::abs(candidate.speed - goal.desired_speed) / speed_ref, 0.0, 1.0);
  return heading_score * speed_score;
}

namespace {

// Per-contact terms of colregs_utility that do not depend on the candidate.
struct PreparedContact
{
  Eigen::Vector2d position;
  Eigen::Vector2d velocity;
  bool biased = false;
  double weight = 0.0;
};

double prepared_utility(const Eigen::Vector2d& dir, double speed, const Eigen::Vector2d& ego_pos,
                        const PreparedContact& c, const ColregsParams& params)
{
  const Eigen::Vector2d ego_vel = speed * dir;
  const Cpa closest = cpa(ego_pos, ego_vel, c.position, c.velocity, params.time_horizon);
  const double span = params.max_util_cpa_dist - params.min_util_cpa_dist;
  const double base = std::clamp((closest.distance - params.min_util_cpa_dist) / span, 0.0, 1.0);
  if (!c.biased) return base;
  const Eigen::Vector2d rel = (c.position + closest.time * c.velocity) - (ego_pos + closest.time * ego_vel);
  const double side = dir.x() * rel.y() - dir.y() * rel.x();  // > 0: contact to port
  return base * (side > 0.0 ? kPreferredSideBias : kOtherSideBias);
}

PreparedContact prepare(const VehicleState& ego, const TrackedContact& contact, double weight)
{
  const EncounterRole role = classify_role(ego, contact.view.state);
  return {contact.view.state.position(), contact.velocity,
          role == EncounterRole::HeadOn || role == EncounterRole::CrossingGiveWay, weight};
}

}  // namespace

double colregs_utility(const Candidate& candidate, const VehicleState& ego, const TrackedContact& contact,
                       const ColregsParams& params)
{
  const Eigen::Vector2d dir{std::cos(candidate.heading), std::sin(candidate.heading)};
  return prepared_utility(dir, candidate.speed, ego.position(), prepare(ego, contact, 1.0), params);
}

double priority_weight(double range, const ColregsParams& params)
{
  if (range >= params.pwt_outer_dist) return 0.0;
  if (range <= params.pwt_inner_dist) return 1.0;
  return (params.pwt_outer_dist - range) / (params.pwt_outer_dist - params.pwt_inner_dist);
}

ControlInput track_candidate(const Candidate& candidate, const VehicleState& ego, const WaypointGoal& goal,
                             double heading_gain, const VehicleSpec& spec)
{
  const double dist = (goal.target - ego.position()).norm();
  const double ramp = std::min(1.0, dist / (2.0 * goal.capture_radius));
  const ControlInput raw{candidate.speed * ramp, heading_gain * wrap_angle(candidate.heading - ego.theta)};
  return clamp(raw, spec);
}

ControlInput waypoint_control(const VehicleState& ego, const WaypointGoal& goal, double heading_gain,
                              const VehicleSpec& spec)
{
  return track_candidate({bearing_to(ego, goal.target), goal.desired_speed}, ego, goal, heading_gain, spec);
}

BlendDecision blend_detailed(const VehicleState& ego, const VehicleSpec& spec, const WaypointGoal& goal,
                             const std::vector<TrackedContact>& contacts, const ColregsParams& params,
                             const CandidateGrid& grid, double heading_gain)
{
  std::vector<PreparedContact> weighted;
  for (const auto& c : contacts) {
    const double w = priority_weight((c.view.state.position() - ego.position()).norm(), params);
    if (w <= 0.0) continue;
    weighted.push_back(prepare(ego, c, w));
  }

  BlendDecision out;
  if (weighted.empty()) {
    out.u = waypoint_control(ego, goal, heading_gain, spec);
    out.chosen = {bearing_to(ego, goal.target), goal.desired_speed};
    out.transit_score = out.total_score = transit_utility(out.chosen, ego, goal);
    return out;
  }

  out.used_grid = true;
  const Eigen::Vector2d ego_pos = ego.position();
  bool first = true;
  for (const double heading : grid.headings) {
    const Eigen::Vector2d dir{std::cos(heading), std::sin(heading)};
    for (const double speed : grid.speeds) {
      const Candidate cand{heading, speed};
      const double transit = transit_utility(cand, ego, goal);
      double total = transit;
      for (const auto& c : weighted) total += c.weight * prepared_utility(dir, speed, ego_pos, c, params);
      if (first || total > out.total_score) {
        first = false;
        out.chosen = cand;
        out.transit_score = transit;
        out.total_score = total;
      }
    }
  }
  out.u = track_candidate(out.chosen, ego, goal, heading_gain, spec);
  return out;
}

ControlInput blend(const VehicleState& ego, const VehicleSpec& spec, const WaypointGoal& goal,
                   const std::vector<TrackedContact>& contacts, const ColregsParams& params,
                   const CandidateGrid& grid, double heading_gain)
{
  return blend_detailed(ego, spec, goal, contacts, params, grid, heading_gain).u;
}

}  // namespace barrier_fleet
