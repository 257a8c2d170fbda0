#ifndef BARRIER_FLEET_DENSE_QP_HPP
#define BARRIER_FLEET_DENSE_QP_HPP

/**
 * @file
 * @brief Dual active-set solver for small, dense, strictly convex QPs.
 *
 *     min  1/2 x' H x + c' x
 *     s.t. A x <= b
 *
 * The iteration starts at the unconstrained minimizer and adds violated rows
 * one at a time, dropping rows whose multipliers would turn negative (the
 * Goldfarb-Idnani dual method). Because every iterate is dual feasible, an
 * empty feasible set is detected as soon as a violated row cannot be reduced
 * by any combination of the active rows. Projections are recomputed from
 * scratch at each step; this is fine for the handful of variables the safety
 * filter needs and keeps the code short.
 */

#include <Eigen/Dense>

#include <vector>

namespace barrier_fleet::qp {

struct DenseQp
{
  Eigen::MatrixXd H;  ///< n x n, symmetric positive definite
  Eigen::VectorXd c;  ///< n
  Eigen::MatrixXd A;  ///< m x n
  Eigen::VectorXd b;  ///< m
};

enum class Status { Optimal, Infeasible, MaxIterations };

struct Solution
{
  Status status = Status::Infeasible;
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;   ///< m, zero for inactive rows
  std::vector<int> active;  ///< row indices in the final working set
  int iterations = 0;
};

struct Options
{
  double feasibility_tol = 1e-11;
  int max_iterations = 0;  ///< 0 selects 20 * (n + m) + 20
};

Solution solve(const DenseQp& problem, const Options& options = {});

double objective(const DenseQp& problem, const Eigen::VectorXd& x);

/// Largest violation among stationarity, primal feasibility, dual
/// feasibility and complementarity. Each term is relative: stationarity and
/// multipliers against 1 + max(|Hx|, |c|, |A'lambda|), rows against
/// 1 + |b_i| + |a_i| |x|. Absolute residuals grow with the slack weight.
double kkt_residual(const DenseQp& problem, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda);

}  // namespace barrier_fleet::qp

#endif
