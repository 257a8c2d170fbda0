#include "barrier_fleet/cbf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace barrier_fleet {

double h_pair(const VehicleState& ego, const VehicleState& contact, double r_safe)
{
  const double dx = ego.x - contact.x;
  const double dy = ego.y - contact.y;
  return dx * dx + dy * dy - r_safe * r_safe;
}

Eigen::Vector2d lie_derivative_ego(const VehicleState& ego, const VehicleState& contact, double gamma)
{
  const double dx = ego.x - contact.x;
  const double dy = ego.y - contact.y;
  const double c = std::cos(ego.theta);
  const double s = std::sin(ego.theta);
  return {2.0 * dx * c + 2.0 * dy * s, -2.0 * dx * gamma * s + 2.0 * dy * gamma * c};
}

Eigen::Vector2d lie_derivative_contact(const VehicleState& ego, const ContactView& contact)
{
  // dh/dp_j = 2 (p_j - p_i)
  const double dx = contact.state.x - ego.x;
  const double dy = contact.state.y - ego.y;
  const double c = std::cos(contact.state.theta);
  const double s = std::sin(contact.state.theta);
  const double gamma = contact.gamma;
  return {2.0 * dx * c + 2.0 * dy * s, -2.0 * dx * gamma * s + 2.0 * dy * gamma * c};
}

double box_minimum(const Eigen::Vector2d& c, const ControlBounds& bounds)
{
  const double thr = std::min(c[0] * bounds.thr_lo(), c[0] * bounds.thr_hi());
  const double rud = std::min(c[1] * bounds.rud_lo(), c[1] * bounds.rud_hi());
  return thr + rud;
}

namespace {

double coordinate_argmin(double coeff, double lo, double hi)
{
  if (coeff > 0.0) return lo;
  if (coeff < 0.0) return hi;
  return std::clamp(0.0, lo, hi);
}

}  // namespace

ControlInput box_argmin(const Eigen::Vector2d& c, const ControlBounds& bounds)
{
  return {coordinate_argmin(c[0], bounds.thr_lo(), bounds.thr_hi()),
          coordinate_argmin(c[1], bounds.rud_lo(), bounds.rud_hi())};
}

double zeta_min(const ContactView& contact, const VehicleState& ego)
{
  if (contact.heading_known) return box_minimum(lie_derivative_contact(ego, contact), contact.bounds);

  double worst = std::numeric_limits<double>::infinity();
  ContactView probe = contact;
  for (int deg = -179; deg <= 180; ++deg) {
    probe.state.theta = deg * std::numbers::pi / 180.0;
    worst = std::min(worst, box_minimum(lie_derivative_contact(ego, probe), probe.bounds));
  }
  return worst;
}

ControlInput worst_case_input(const ContactView& contact, const VehicleState& ego)
{
  return box_argmin(lie_derivative_contact(ego, contact), contact.bounds);
}

PairwiseConstraint build_constraint(const VehicleState& ego,
                                    const VehicleSpec& ego_spec,
                                    const ContactView& contact,
                                    const BarrierParams& params)
{
  PairwiseConstraint out;
  out.h_value = h_pair(ego, contact.state, ego_spec.r_safe);
  out.a = -lie_derivative_ego(ego, contact.state, ego_spec.gamma);
  out.b = zeta_min(contact, ego) + params.alpha_gain * out.h_value;
  out.contact_id = contact.id;
  return out;
}

std::vector<PairwiseConstraint> assemble_constraints(const VehicleState& ego,
                                                     const VehicleSpec& ego_spec,
                                                     const std::vector<ContactView>& contacts,
                                                     const BarrierParams& params)
{
  std::vector<PairwiseConstraint> out;
  out.reserve(contacts.size());
  for (const auto& contact : contacts) out.push_back(build_constraint(ego, ego_spec, contact, params));
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& l, const auto& r) { return l.contact_id < r.contact_id; });
  return out;
}

}  // namespace barrier_fleet
