#ifndef BARRIER_FLEET_CBF_HPP
#define BARRIER_FLEET_CBF_HPP

/**
 * @file
 * @brief Pairwise collision barrier and the worst-case neighbor bound.
 *
 * For an ego vessel i and a contact j the barrier is
 *
 *     h(x_i, x_j) = |p_i - p_j|^2 - r_safe^2
 *
 * and its time derivative splits into an ego term (known, linear in u_i) and a
 * contact term (unknown). The contact term is replaced by its minimum over the
 * contact's admissible inputs, which yields one linear inequality a . u_i <= b
 * per contact.
 */

#include "barrier_fleet/dynamics.hpp"

#include <vector>

namespace barrier_fleet {

struct BarrierParams
{
  double r_safe = 15.0;     ///< default radius; VehicleSpec::r_safe overrides per vessel
  double alpha_gain = 1.0;  ///< k in alpha(h) = k h  [1/s]
};

/// What the ego knows about one neighbor: its pose and (an over-approximation
/// of) its input box.
struct ContactView
{
  int id = 0;
  VehicleState state{};
  ControlBounds bounds{};
  double gamma = 2.0;
  /// When false, the contact's heading is treated as unknown and the worst
  /// case is also taken over heading.
  bool heading_known = true;
};

/// a . u <= b on the ego input u = [u_thr, u_rud].
struct PairwiseConstraint
{
  Eigen::Vector2d a = Eigen::Vector2d::Zero();
  double b = 0.0;
  double h_value = 0.0;
  int contact_id = 0;

  bool satisfied_by(const ControlInput& u, double slack = 0.0) const
  {
    return a.dot(u.vector()) <= b + slack;
  }
};

double h_pair(const VehicleState& ego, const VehicleState& contact, double r_safe);

/// dh/dx_i . g(x_i), the sensitivity of h to the ego input.
Eigen::Vector2d lie_derivative_ego(const VehicleState& ego, const VehicleState& contact, double gamma);

/// dh/dx_j . g(x_j), the sensitivity of h to the contact input.
Eigen::Vector2d lie_derivative_contact(const VehicleState& ego, const ContactView& contact);

/// min over the box of c . u (closed form, evaluated per coordinate).
double box_minimum(const Eigen::Vector2d& c, const ControlBounds& bounds);

/// A minimizer of c . u over the box. Zero coefficients pick 0 when the box
/// contains it, otherwise the bound closest to 0.
ControlInput box_argmin(const Eigen::Vector2d& c, const ControlBounds& bounds);

/// Worst-case contribution of the contact to dh/dt. Heading-unknown contacts
/// are swept over 360 one-degree headings.
double zeta_min(const ContactView& contact, const VehicleState& ego);

/// The contact input attaining zeta_min (heading must be known).
ControlInput worst_case_input(const ContactView& contact, const VehicleState& ego);

/// Uses ego_spec.r_safe for the barrier radius and params.alpha_gain for alpha.
PairwiseConstraint build_constraint(const VehicleState& ego,
                                    const VehicleSpec& ego_spec,
                                    const ContactView& contact,
                                    const BarrierParams& params);

/// One constraint per contact, ordered by contact id (stable for equal ids).
std::vector<PairwiseConstraint> assemble_constraints(const VehicleState& ego,
                                                     const VehicleSpec& ego_spec,
                                                     const std::vector<ContactView>& contacts,
                                                     const BarrierParams& params);

}  // namespace barrier_fleet

#endif
