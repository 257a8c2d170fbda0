#include "barrier_fleet/dense_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace barrier_fleet::qp {

namespace {

struct Projection
{
  Eigen::MatrixXd reduced_inverse;  // P = H^-1 - H^-1 N (N' H^-1 N)^-1 N' H^-1
  Eigen::MatrixXd multiplier_map;   // (N' H^-1 N)^-1 N' H^-1
};

Projection project(const Eigen::MatrixXd& h_inv, const Eigen::MatrixXd& A, const std::vector<int>& active)
{
  const Eigen::Index n = h_inv.rows();
  Projection p;
  if (active.empty()) {
    p.reduced_inverse = h_inv;
    p.multiplier_map.resize(0, n);
    return p;
  }
  Eigen::MatrixXd N(n, static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) N.col(static_cast<Eigen::Index>(k)) = A.row(active[k]).transpose();
  const Eigen::MatrixXd hn = h_inv * N;
  const Eigen::MatrixXd gram = N.transpose() * hn;
  p.multiplier_map = gram.ldlt().solve(hn.transpose());
  p.reduced_inverse = h_inv - hn * p.multiplier_map;
  return p;
}

double row_scale(const DenseQp& qp, Eigen::Index i)
{
  return 1.0 + std::abs(qp.b[i]) + qp.A.row(i).lpNorm<Eigen::Infinity>();
}

// Solves the equality-constrained KKT system with the given rows held active.
// Returns false when the result is not primal and dual feasible.
bool kkt_candidate(const DenseQp& qp, const std::vector<int>& rows, double tol,
                   Eigen::VectorXd& x, Eigen::VectorXd& lambda)
{
  // Null-space form: x = x_p + Z y with A_W x_p = b_W and A_W Z = 0. Unlike
  // the range-space form it never divides by the small slack curvature, so
  // rows that pin the inputs pin them to working precision.
  const Eigen::Index n = qp.H.rows();
  const auto k = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd aw(k, n);
  Eigen::VectorXd bw(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    aw.row(j) = qp.A.row(rows[static_cast<std::size_t>(j)]);
    bw[j] = qp.b[rows[static_cast<std::size_t>(j)]];
  }
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(k);
  if (k == 0) {
    x = qp.H.llt().solve(-qp.c);
  } else {
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aw.transpose());
    const Eigen::Index rank = qr.rank();
    const Eigen::MatrixXd q = qr.householderQ();
    const Eigen::VectorXd x_p = aw.completeOrthogonalDecomposition().solve(bw);
    if ((aw * x_p - bw).lpNorm<Eigen::Infinity>() > tol * (1.0 + bw.lpNorm<Eigen::Infinity>())) return false;
    x = x_p;
    if (rank < n) {
      const Eigen::MatrixXd z = q.rightCols(n - rank);
      const Eigen::MatrixXd reduced = z.transpose() * qp.H * z;
      x += z * reduced.llt().solve(-z.transpose() * (qp.H * x_p + qp.c));
    }
    mu = aw.transpose().completeOrthogonalDecomposition().solve(-(qp.H * x + qp.c));
  }
  if (!x.allFinite() || !mu.allFinite()) return false;
  lambda = Eigen::VectorXd::Zero(qp.A.rows());
  for (Eigen::Index j = 0; j < k; ++j) lambda[rows[static_cast<std::size_t>(j)]] = mu[j];
  for (Eigen::Index i = 0; i < qp.A.rows(); ++i) {
    const double scale = row_scale(qp, i);
    if (lambda[i] < -tol * (1.0 + lambda.lpNorm<Eigen::Infinity>())) return false;
    if (qp.A.row(i).dot(x) - qp.b[i] > tol * scale) return false;
  }
  lambda = lambda.cwiseMax(0.0);
  return true;
}

// The dual iterations lose digits when the Hessian is badly scaled (slack
// weights). Re-solve the KKT system on the final working set, and on that set
// plus the rows that are active to within a loose tolerance, and keep the
// best candidate.
void polish(const DenseQp& qp, Solution& sol, double tol)
{
  std::vector<std::vector<int>> candidates{sol.active};
  std::vector<int> near = sol.active;
  for (Eigen::Index i = 0; i < qp.A.rows(); ++i) {
    if (std::find(near.begin(), near.end(), static_cast<int>(i)) != near.end()) continue;
    if (std::abs(qp.A.row(i).dot(sol.x) - qp.b[i]) <= 1e-6 * row_scale(qp, i)) {
      near.push_back(static_cast<int>(i));
      candidates.push_back(sol.active);
      candidates.back().push_back(static_cast<int>(i));
    }
  }
  if (near.size() > sol.active.size() + 1) candidates.push_back(near);

  double best = kkt_residual(qp, sol.x, sol.lambda);
  for (const auto& rows : candidates) {
    Eigen::VectorXd x, lambda;
    if (!kkt_candidate(qp, rows, tol, x, lambda)) continue;
    const double r = kkt_residual(qp, x, lambda);
    if (r <= best) {
      best = r;
      sol.x = x;
      sol.lambda = lambda;
      sol.active.clear();
      for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] > 0.0) sol.active.push_back(static_cast<int>(i));
      }
    }
  }
}

Solution solve_once(const DenseQp& qp, const Options& options)
{
  const Eigen::Index n = qp.H.rows();
  const Eigen::Index m = qp.A.rows();
  const int max_iter = options.max_iterations > 0 ? options.max_iterations
                                                  : static_cast<int>(20 * (n + m) + 20);

  const Eigen::LLT<Eigen::MatrixXd> llt(qp.H);
  const Eigen::MatrixXd h_inv = llt.solve(Eigen::MatrixXd::Identity(n, n));

  Solution sol;
  sol.x = -h_inv * qp.c;
  sol.lambda = Eigen::VectorXd::Zero(m);

  std::vector<bool> in_set(static_cast<std::size_t>(m), false);
  const double tiny = 1e-14 * (1.0 + h_inv.lpNorm<Eigen::Infinity>());

  int pending = -1;  // violated row still being brought into the working set
  while (sol.iterations < max_iter) {
    ++sol.iterations;

    if (pending < 0) {
      double worst = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (in_set[static_cast<std::size_t>(i)]) continue;
        const double scale = row_scale(qp, i);
        const double v = (qp.A.row(i).dot(sol.x) - qp.b[i]) / scale;
        if (v > options.feasibility_tol && v > worst) {
          worst = v;
          pending = static_cast<int>(i);
        }
      }
      if (pending < 0) {
        sol.status = Status::Optimal;
        polish(qp, sol, options.feasibility_tol);
        return sol;
      }
    }

    const double violation = qp.A.row(pending).dot(sol.x) - qp.b[pending];
    if (violation <= options.feasibility_tol * row_scale(qp, pending)) {
      // Satisfied after a partial step; rescan instead of stepping backwards.
      pending = -1;
      continue;
    }

    const Eigen::VectorXd a_p = qp.A.row(pending).transpose();
    const Projection proj = project(h_inv, qp.A, sol.active);
    const Eigen::VectorXd z = -proj.reduced_inverse * a_p;
    const Eigen::VectorXd r = proj.multiplier_map * a_p;
    const double curvature = -a_p.dot(z);  // a_p' P a_p >= 0

    // Largest step keeping the working-set multipliers nonnegative.
    double t_partial = std::numeric_limits<double>::infinity();
    int blocking = -1;
    for (Eigen::Index j = 0; j < r.size(); ++j) {
      if (r[j] > 1e-15) {
        const double t = sol.lambda[sol.active[static_cast<std::size_t>(j)]] / r[j];
        if (t < t_partial) {
          t_partial = t;
          blocking = static_cast<int>(j);
        }
      }
    }

    const bool dependent = curvature <= tiny * a_p.squaredNorm();
    const double t_full = dependent ? std::numeric_limits<double>::infinity() : violation / curvature;

    if (dependent && blocking < 0) {
      sol.status = Status::Infeasible;
      return sol;
    }

    const double t = std::min(t_partial, t_full);
    sol.x += t * z;
    for (Eigen::Index j = 0; j < r.size(); ++j) sol.lambda[sol.active[static_cast<std::size_t>(j)]] -= t * r[j];
    sol.lambda[pending] += t;

    if (t_full <= t_partial) {
      sol.active.push_back(pending);
      in_set[static_cast<std::size_t>(pending)] = true;
      pending = -1;
    } else {
      const int dropped = sol.active[static_cast<std::size_t>(blocking)];
      sol.lambda[dropped] = 0.0;
      in_set[static_cast<std::size_t>(dropped)] = false;
      sol.active.erase(sol.active.begin() + blocking);
    }
  }
  sol.status = Status::MaxIterations;
  return sol;
}

}  // namespace

Solution solve(const DenseQp& qp, const Options& options)
{
  Solution sol = solve_once(qp, options);
  if (sol.status != Status::MaxIterations) return sol;

  // Cycling at a degenerate vertex. Relax each face by a distinct tiny amount
  // so that no vertex has more active rows than variables, then polish the
  // result on the original faces.
  DenseQp relaxed = qp;
  const auto m = static_cast<double>(qp.A.rows());
  for (Eigen::Index i = 0; i < qp.A.rows(); ++i) {
    relaxed.b[i] += 1e-9 * row_scale(qp, i) * (static_cast<double>(i) + 1.0) / m;
  }
  Solution retry = solve_once(relaxed, options);
  if (retry.status != Status::Optimal) return sol;
  retry.iterations += sol.iterations;
  polish(qp, retry, options.feasibility_tol);
  return retry;
}

double objective(const DenseQp& qp, const Eigen::VectorXd& x)
{
  return 0.5 * x.dot(qp.H * x) + qp.c.dot(x);
}

double kkt_residual(const DenseQp& qp, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda)
{
  const Eigen::VectorXd hx = qp.H * x;
  const Eigen::VectorXd at_lambda = qp.A.transpose() * lambda;
  const double dual_scale = 1.0 + std::max({hx.lpNorm<Eigen::Infinity>(), qp.c.lpNorm<Eigen::Infinity>(),
                                            at_lambda.lpNorm<Eigen::Infinity>()});
  double worst = (hx + qp.c + at_lambda).lpNorm<Eigen::Infinity>() / dual_scale;
  const double x_norm = x.lpNorm<Eigen::Infinity>();
  for (Eigen::Index i = 0; i < qp.A.rows(); ++i) {
    const double primal_scale = 1.0 + std::abs(qp.b[i]) + qp.A.row(i).lpNorm<Eigen::Infinity>() * x_norm;
    const double g = (qp.A.row(i).dot(x) - qp.b[i]) / primal_scale;
    worst = std::max({worst, g, -lambda[i] / dual_scale, std::abs(lambda[i]) / dual_scale * std::abs(g)});
  }
  return worst;
}

}  // namespace barrier_fleet::qp
