#ifndef BARRIER_FLEET_DYNAMICS_HPP
#define BARRIER_FLEET_DYNAMICS_HPP

/**
 * @file
 * @brief Control-point kinematics of a surface vessel.
 *
 * The state is the planar pose of a point offset `gamma` meters ahead of the
 * pivot. Its first-order dynamics are
 *
 *     d/dt [x, y, theta] = g(theta) * [u_thr, u_rud]
 *
 * with g = [[cos, -gamma sin], [sin, gamma cos], [0, 1]]. Setting gamma = 0
 * recovers the unicycle.
 */

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace barrier_fleet {

/// Pose of a vessel's control point. theta lives in (-pi, pi].
struct VehicleState
{
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Eigen::Vector2d position() const { return {x, y}; }
};

/// Thrust (control-point forward speed, m/s) and rudder (yaw rate, rad/s).
struct ControlInput
{
  double u_thr = 0.0;
  double u_rud = 0.0;

  bool operator==(const ControlInput&) const = default;
  Eigen::Vector2d vector() const { return {u_thr, u_rud}; }
};

/// Box of admissible inputs [-thr_min, thr_max] x [-rud_min, rud_max].
/// thr_min and rud_min are stored as magnitudes.
struct ControlBounds
{
  double thr_min = 0.0;
  double thr_max = 2.0;
  double rud_min = 1.0;
  double rud_max = 1.0;

  double thr_lo() const { return -thr_min; }
  double thr_hi() const { return thr_max; }
  double rud_lo() const { return -rud_min; }
  double rud_hi() const { return rud_max; }
  bool contains(const ControlInput& u) const;
};

struct VehicleSpec
{
  double gamma = 2.0;    ///< control-point offset [m]
  double r_safe = 15.0;  ///< safety radius used in this vessel's barriers [m]
  ControlBounds bounds{};
  /// Fraction of thr_max below which rudder authority ramps down. 0 disables the gate.
  double rudder_gate_threshold = 0.25;
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

Eigen::Matrix<double, 3, 2> g_matrix(const VehicleState& state, double gamma);

/// Translational part of g(x) u, i.e. the control-point velocity.
Eigen::Vector2d point_velocity(const VehicleState& state, const ControlInput& u, double gamma);

/// Rudder magnitude available at thrust `u_thr` under the linear-ramp gate.
double rudder_authority(const ControlBounds& bounds, double gate_threshold, double u_thr);

/// Saturates thrust into the box, then rudder into the gated limit computed
/// from the saturated thrust.
ControlInput clamp(const ControlInput& u, const ControlBounds& bounds, double gate_threshold);
ControlInput clamp(const ControlInput& u, const VehicleSpec& spec);

/// Forward-Euler step with a translational disturbance. Throws
/// std::invalid_argument when dt <= 0.
VehicleState step(const VehicleState& state,
                  const ControlInput& u,
                  const Eigen::Vector2d& disturbance,
                  double dt,
                  double gamma);

/// Throws std::invalid_argument if the spec breaks a hard invariant
/// (0 < gamma < r_safe, positive maxima, gate threshold in [0, 1]).
void validate(const VehicleSpec& spec);

/// gamma * rud_max >= thr_max: the vessel can swing its control point at
/// least as fast as it can drive it forward.
bool satisfies_escape_condition(const VehicleSpec& spec);

/// Non-fatal diagnostics for a spec (empty when everything is fine).
std::vector<std::string> spec_warnings(const VehicleSpec& spec);

}  // namespace barrier_fleet

#endif
