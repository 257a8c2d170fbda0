#include "barrier_fleet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace barrier_fleet {

bool ControlBounds::contains(const ControlInput& u) const
{
  return u.u_thr >= thr_lo() && u.u_thr <= thr_hi() && u.u_rud >= rud_lo() && u.u_rud <= rud_hi();
}

double wrap_angle(double angle)
{
  constexpr double pi = std::numbers::pi;
  if (angle > -pi && angle <= pi) return angle;
  double wrapped = std::remainder(angle, 2.0 * pi);  // [-pi, pi]
  if (wrapped <= -pi) wrapped += 2.0 * pi;
  return wrapped;
}

Eigen::Matrix<double, 3, 2> g_matrix(const VehicleState& state, double gamma)
{
  const double c = std::cos(state.theta);
  const double s = std::sin(state.theta);
  Eigen::Matrix<double, 3, 2> g;
  g << c, -gamma * s,
       s, gamma * c,
       0.0, 1.0;
  return g;
}

Eigen::Vector2d point_velocity(const VehicleState& state, const ControlInput& u, double gamma)
{
  const double c = std::cos(state.theta);
  const double s = std::sin(state.theta);
  return {c * u.u_thr - gamma * s * u.u_rud, s * u.u_thr + gamma * c * u.u_rud};
}

double rudder_authority(const ControlBounds& bounds, double gate_threshold, double u_thr)
{
  if (gate_threshold <= 0.0) return bounds.rud_max;
  const double knee = gate_threshold * bounds.thr_max;
  return bounds.rud_max * std::min(1.0, std::abs(u_thr) / knee);
}

ControlInput clamp(const ControlInput& u, const ControlBounds& bounds, double gate_threshold)
{
  ControlInput out;
  out.u_thr = std::clamp(u.u_thr, bounds.thr_lo(), bounds.thr_hi());
  const double scale = rudder_authority(bounds, gate_threshold, out.u_thr) / bounds.rud_max;
  out.u_rud = std::clamp(u.u_rud, -bounds.rud_min * scale, bounds.rud_max * scale);
  return out;
}

ControlInput clamp(const ControlInput& u, const VehicleSpec& spec)
{
  return clamp(u, spec.bounds, spec.rudder_gate_threshold);
}

VehicleState step(const VehicleState& state,
                  const ControlInput& u,
                  const Eigen::Vector2d& disturbance,
                  double dt,
                  double gamma)
{
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const Eigen::Vector2d v = point_velocity(state, u, gamma) + disturbance;
  VehicleState next;
  next.x = state.x + dt * v.x();
  next.y = state.y + dt * v.y();
  next.theta = wrap_angle(state.theta + dt * u.u_rud);
  return next;
}

void validate(const VehicleSpec& spec)
{
  if (!(spec.gamma > 0.0 && spec.gamma < spec.r_safe)) {
    throw std::invalid_argument("vehicle spec: require 0 < gamma < r_safe");
  }
  const auto& b = spec.bounds;
  if (!(b.thr_max > 0.0 && b.rud_max > 0.0)) {
    throw std::invalid_argument("vehicle spec: thr_max and rud_max must be positive");
  }
  if (b.thr_min < 0.0 || b.rud_min < 0.0) {
    throw std::invalid_argument("vehicle spec: thr_min and rud_min are magnitudes and must be >= 0");
  }
  if (!(spec.rudder_gate_threshold >= 0.0 && spec.rudder_gate_threshold <= 1.0)) {
    throw std::invalid_argument("vehicle spec: rudder_gate_threshold must lie in [0, 1]");
  }
}

bool satisfies_escape_condition(const VehicleSpec& spec)
{
  return spec.gamma * spec.bounds.rud_max >= spec.bounds.thr_max;
}

std::vector<std::string> spec_warnings(const VehicleSpec& spec)
{
  std::vector<std::string> out;
  if (!satisfies_escape_condition(spec)) {
    out.emplace_back("gamma * rud_max < thr_max: worst-case escape guarantee not claimed for this vessel");
  }
  return out;
}

}  // namespace barrier_fleet
