#ifndef BARRIER_FLEET_QP_FILTER_HPP
#define BARRIER_FLEET_QP_FILTER_HPP

#include "barrier_fleet/cbf.hpp"
#include "barrier_fleet/dynamics.hpp"

#include <stdexcept>
#include <vector>

namespace barrier_fleet {

/// Diagonal weights of the filter objective
///   q_thr (u_thr - nom)^2 + q_rud (u_rud - nom)^2 + slack_penalty * sum s_k^2
struct QpWeights
{
  double q_thr = 1.0;
  double q_rud = 4.0;
  double slack_penalty = 4e6;

  /// q_rud = gamma^2 puts both deviations in control-point velocity units;
  /// slack penalty is 1e6 times the larger control weight.
  static QpWeights for_gamma(double gamma);
};

struct SlackEntry
{
  int contact_id = 0;
  double slack = 0.0;  ///< m^2/s, >= 0
};

struct FilterResult
{
  ControlInput u_safe{};
  std::vector<SlackEntry> slacks;  ///< nonempty only if the unslacked problem was infeasible
  std::vector<int> active_set;     ///< contact ids of binding pairwise constraints
  bool modified = false;
  double objective_value = 0.0;
  double kkt_residual = 0.0;

  double total_slack() const;
};

/// Raised only when even the fully slacked problem cannot be solved.
class QpInternalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/**
 * Minimizes the weighted distance to u_nom over the admissible inputs
 * intersected with all constraints. Admissible means inside the box and, when
 * gate_slope > 0, also |u_rud| <= gate_slope * u_thr. When that set is empty,
 * slacks are attached first to the rows violated at the projection of u_nom,
 * then to rows violated at the fully-slacked optimum, until the problem
 * becomes feasible. Gate rows are never slacked.
 */
FilterResult solve_qp(const ControlInput& u_nom,
                      const std::vector<PairwiseConstraint>& constraints,
                      const ControlBounds& bounds,
                      const QpWeights& weights,
                      double gate_slope = 0.0);

/// Slope of the rudder gate when the gated input set is convex (no reverse
/// thrust), else 0. With reverse thrust the gate is a non-convex bow tie.
double exact_gate_slope(const VehicleSpec& spec);

/// Fallback box when the gate cannot enter the QP exactly: the rudder limit
/// is gated at the nominal thrust.
ControlBounds filter_bounds(const ControlInput& u_nom, const VehicleSpec& spec);

FilterResult filter(const ControlInput& u_nom,
                    const VehicleState& ego,
                    const VehicleSpec& ego_spec,
                    const std::vector<ContactView>& contacts,
                    const BarrierParams& params,
                    const QpWeights& weights);

}  // namespace barrier_fleet

#endif
