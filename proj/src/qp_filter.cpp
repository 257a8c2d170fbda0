#include "barrier_fleet/qp_filter.hpp"

#include "barrier_fleet/dense_qp.hpp"

#include <algorithm>
#include <cmath>

namespace barrier_fleet {

QpWeights QpWeights::for_gamma(double gamma)
{
  QpWeights w;
  w.q_thr = 1.0;
  w.q_rud = gamma * gamma;
  w.slack_penalty = 1e6 * std::max(w.q_thr, w.q_rud);
  return w;
}

double FilterResult::total_slack() const
{
  double sum = 0.0;
  for (const auto& s : slacks) sum += s.slack;
  return sum;
}

namespace {

// Variables: [u_thr, u_rud, s_0 .. s_{k-1}] with one slack per flagged row.
// Rows: pairwise constraints, the box faces, two gate faces when the rudder
// is gated, then s >= 0. The gate faces imply u_thr >= 0, so the lower thrust
// face is dropped with them; keeping it makes the apex a degenerate vertex.
struct Layout
{
  qp::DenseQp problem;
  std::vector<int> slack_of_row;  // constraint index -> variable index, or -1
};

Layout build(const ControlInput& u_nom,
             const std::vector<PairwiseConstraint>& constraints,
             const ControlBounds& bounds,
             double gate_slope,
             const QpWeights& weights,
             const std::vector<bool>& slacked)
{
  const auto k = static_cast<Eigen::Index>(constraints.size());
  Eigen::Index n_slack = 0;
  Layout out;
  out.slack_of_row.assign(constraints.size(), -1);
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    if (slacked[i]) out.slack_of_row[i] = static_cast<int>(2 + n_slack++);
  }
  const bool gated = gate_slope > 0.0;
  const Eigen::Index n_input_rows = gated ? 5 : 4;
  const Eigen::Index n = 2 + n_slack;
  const Eigen::Index m = k + n_input_rows + n_slack;

  auto& qp = out.problem;
  qp.H = Eigen::MatrixXd::Zero(n, n);
  qp.c = Eigen::VectorXd::Zero(n);
  qp.H(0, 0) = 2.0 * weights.q_thr;
  qp.H(1, 1) = 2.0 * weights.q_rud;
  for (Eigen::Index s = 2; s < n; ++s) qp.H(s, s) = 2.0 * weights.slack_penalty;
  qp.c[0] = -2.0 * weights.q_thr * u_nom.u_thr;
  qp.c[1] = -2.0 * weights.q_rud * u_nom.u_rud;

  qp.A = Eigen::MatrixXd::Zero(m, n);
  qp.b = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& con = constraints[static_cast<std::size_t>(i)];
    qp.A(i, 0) = con.a[0];
    qp.A(i, 1) = con.a[1];
    qp.b[i] = con.b;
    if (const int s = out.slack_of_row[static_cast<std::size_t>(i)]; s >= 0) qp.A(i, s) = -1.0;
  }
  Eigen::Index row = k;
  auto face = [&](double a_thr, double a_rud, double rhs) {
    qp.A(row, 0) = a_thr;
    qp.A(row, 1) = a_rud;
    qp.b[row] = rhs;
    ++row;
  };
  face(1.0, 0.0, bounds.thr_hi());
  face(0.0, 1.0, bounds.rud_hi());
  face(0.0, -1.0, -bounds.rud_lo());
  if (gated) {
    face(-gate_slope, 1.0, 0.0);
    face(-gate_slope, -1.0, 0.0);
  } else {
    face(-1.0, 0.0, -bounds.thr_lo());
  }
  for (Eigen::Index s = 0; s < n_slack; ++s) qp.A(row + s, 2 + s) = -1.0;
  return out;
}

ControlInput admissible_projection(const ControlInput& u, const ControlBounds& bounds, double gate_slope)
{
  const double thr = std::clamp(u.u_thr, bounds.thr_lo(), bounds.thr_hi());
  double lo = bounds.rud_lo();
  double hi = bounds.rud_hi();
  if (gate_slope > 0.0) {
    lo = std::max(lo, -gate_slope * thr);
    hi = std::min(hi, gate_slope * thr);
  }
  return {thr, std::clamp(u.u_rud, lo, hi)};
}

bool admissible(const ControlInput& u, const ControlBounds& bounds, double gate_slope)
{
  return bounds.contains(u) && (gate_slope <= 0.0 || std::abs(u.u_rud) <= gate_slope * u.u_thr);
}

double weighted_distance(const ControlInput& u, const ControlInput& u_nom, const QpWeights& w)
{
  const double dt = u.u_thr - u_nom.u_thr;
  const double dr = u.u_rud - u_nom.u_rud;
  return w.q_thr * dt * dt + w.q_rud * dr * dr;
}

// Marks rows violated at u. Returns true if any new row was marked.
bool mark_violated(const std::vector<PairwiseConstraint>& constraints, const ControlInput& u,
                   std::vector<bool>& slacked)
{
  bool grew = false;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const double scale = 1.0 + std::abs(constraints[i].b);
    if (!slacked[i] && constraints[i].a.dot(u.vector()) - constraints[i].b > 1e-12 * scale) {
      slacked[i] = true;
      grew = true;
    }
  }
  return grew;
}

FilterResult finish(const ControlInput& u_nom,
                    const std::vector<PairwiseConstraint>& constraints,
                    const QpWeights& weights,
                    const Layout& layout,
                    const qp::Solution& sol)
{
  FilterResult out;
  out.u_safe = {sol.x[0], sol.x[1]};
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    if (const int s = layout.slack_of_row[i]; s >= 0) {
      out.slacks.push_back({constraints[i].contact_id, std::max(0.0, sol.x[s])});
    }
  }
  for (const int row : sol.active) {
    if (row < static_cast<int>(constraints.size())) out.active_set.push_back(constraints[static_cast<std::size_t>(row)].contact_id);
  }
  std::sort(out.active_set.begin(), out.active_set.end());
  out.modified = !(out.u_safe == u_nom);
  double slack_cost = 0.0;
  for (const auto& s : out.slacks) slack_cost += weights.slack_penalty * s.slack * s.slack;
  out.objective_value = weighted_distance(out.u_safe, u_nom, weights) + slack_cost;
  out.kkt_residual = qp::kkt_residual(layout.problem, sol.x, sol.lambda);
  return out;
}

}  // namespace

FilterResult solve_qp(const ControlInput& u_nom,
                      const std::vector<PairwiseConstraint>& constraints,
                      const ControlBounds& bounds,
                      const QpWeights& weights,
                      double gate_slope)
{
  const bool nominal_ok = admissible(u_nom, bounds, gate_slope) &&
      std::all_of(constraints.begin(), constraints.end(), [&](const auto& c) { return c.satisfied_by(u_nom); });
  if (nominal_ok) {
    FilterResult out;
    out.u_safe = u_nom;
    return out;
  }

  std::vector<bool> slacked(constraints.size(), false);
  Layout layout = build(u_nom, constraints, bounds, gate_slope, weights, slacked);
  qp::Solution sol = qp::solve(layout.problem);
  if (sol.status == qp::Status::Optimal) return finish(u_nom, constraints, weights, layout, sol);

  // Escalation: slack the rows violated at the box projection of u_nom, then
  // the rows still violated at the fully slacked optimum, until feasible.
  const std::vector<bool> all(constraints.size(), true);
  const Layout full_layout = build(u_nom, constraints, bounds, gate_slope, weights, all);
  const qp::Solution full = qp::solve(full_layout.problem);
  if (full.status != qp::Status::Optimal) throw QpInternalError("safety filter: fully slacked QP failed");
  const ControlInput full_u{full.x[0], full.x[1]};

  ControlInput probe = admissible_projection(u_nom, bounds, gate_slope);
  for (std::size_t round = 0; round <= constraints.size(); ++round) {
    if (!mark_violated(constraints, probe, slacked)) {
      if (probe == full_u) break;
      probe = full_u;
      if (!mark_violated(constraints, probe, slacked)) break;
    }
    layout = build(u_nom, constraints, bounds, gate_slope, weights, slacked);
    sol = qp::solve(layout.problem);
    if (sol.status == qp::Status::Optimal) return finish(u_nom, constraints, weights, layout, sol);
    probe = full_u;
  }
  return finish(u_nom, constraints, weights, full_layout, full);
}

double exact_gate_slope(const VehicleSpec& spec)
{
  const auto& b = spec.bounds;
  if (!(spec.rudder_gate_threshold > 0.0) || b.thr_lo() < 0.0 || !(b.thr_max > 0.0)) return 0.0;
  return b.rud_max / (spec.rudder_gate_threshold * b.thr_max);
}

ControlBounds filter_bounds(const ControlInput& u_nom, const VehicleSpec& spec)
{
  ControlBounds out = spec.bounds;
  const double scale = rudder_authority(spec.bounds, spec.rudder_gate_threshold,
                                        std::clamp(u_nom.u_thr, out.thr_lo(), out.thr_hi())) /
                       spec.bounds.rud_max;
  out.rud_max *= scale;
  out.rud_min *= scale;
  return out;
}

FilterResult filter(const ControlInput& u_nom,
                    const VehicleState& ego,
                    const VehicleSpec& ego_spec,
                    const std::vector<ContactView>& contacts,
                    const BarrierParams& params,
                    const QpWeights& weights)
{
  const auto constraints = assemble_constraints(ego, ego_spec, contacts, params);
  if (const double slope = exact_gate_slope(ego_spec); slope > 0.0) {
    return solve_qp(u_nom, constraints, ego_spec.bounds, weights, slope);
  }
  return solve_qp(u_nom, constraints, filter_bounds(u_nom, ego_spec), weights);
}

}  // namespace barrier_fleet
