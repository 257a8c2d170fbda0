#include "barrier_fleet/dense_qp.hpp"

#include "doctest.h"

#include <limits>
#include <random>

using namespace barrier_fleet::qp;

namespace {

DenseQp random_problem(std::mt19937_64& rng, int n, int m)
{
  std::normal_distribution<double> normal;
  DenseQp p;
  Eigen::MatrixXd r(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) r(i, j) = normal(rng);
  }
  p.H = r * r.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
  p.c = Eigen::VectorXd::NullaryExpr(n, [&] { return 3.0 * normal(rng); });
  p.A = Eigen::MatrixXd::NullaryExpr(m, n, [&] { return normal(rng); });
  // The origin stays feasible so that the problem is never empty.
  p.b = Eigen::VectorXd::NullaryExpr(m, [&] { return std::abs(normal(rng)) + 0.1; });
  return p;
}

/// Enumerates every working set of at most n rows and keeps the best KKT point.
Eigen::VectorXd enumerate_active_sets(const DenseQp& p)
{
  const int n = static_cast<int>(p.c.size());
  const int m = static_cast<int>(p.b.size());
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> rows;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) rows.push_back(i);
    }
    if (static_cast<int>(rows.size()) > n) continue;
    const int k = static_cast<int>(rows.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = p.H;
    rhs.head(n) = -p.c;
    for (int j = 0; j < k; ++j) {
      kkt.block(n + j, 0, 1, n) = p.A.row(rows[j]);
      kkt.block(0, n + j, n, 1) = p.A.row(rows[j]).transpose();
      rhs[n + j] = p.b[rows[j]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    if (((p.A * x - p.b).array() > 1e-9).any()) continue;
    if ((sol.tail(k).array() < -1e-9).any()) continue;
    const double f = objective(p, x);
    if (f < best) {
      best = f;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace

TEST_SUITE("dense_qp")
{
  TEST_CASE("unconstrained minimizer when no row binds")
  {
    DenseQp p;
    p.H = Eigen::Matrix2d::Identity() * 2.0;
    p.c = Eigen::Vector2d(-2.0, 4.0);
    p.A = Eigen::MatrixXd::Zero(1, 2);
    p.A << 1.0, 0.0;
    p.b = Eigen::VectorXd::Constant(1, 5.0);
    const Solution s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.x[0] == doctest::Approx(1.0));
    CHECK(s.x[1] == doctest::Approx(-2.0));
    CHECK(s.active.empty());
  }

  TEST_CASE("matches exhaustive active-set enumeration")
  {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 300; ++trial) {
      const int n = 2 + trial % 3;
      const int m = 1 + trial % 7;
      const DenseQp p = random_problem(rng, n, m);
      const Solution s = solve(p);
      REQUIRE(s.status == Status::Optimal);
      const Eigen::VectorXd ref = enumerate_active_sets(p);
      REQUIRE(ref.size() == n);
      CHECK((s.x - ref).norm() <= 1e-8 * (1.0 + ref.norm()));
      CHECK(kkt_residual(p, s.x, s.lambda) <= 1e-10);
    }
  }

  TEST_CASE("detects an empty feasible set")
  {
    DenseQp p;
    p.H = Eigen::Matrix2d::Identity();
    p.c = Eigen::Vector2d::Zero();
    p.A = Eigen::MatrixXd(2, 2);
    p.A << 1.0, 0.0, -1.0, 0.0;
    p.b = Eigen::Vector2d(-1.0, -1.0);  // x <= -1 and x >= 1
    CHECK(solve(p).status == Status::Infeasible);
  }

  TEST_CASE("duplicate and parallel rows")
  {
    DenseQp p;
    p.H = Eigen::Matrix2d::Identity();
    p.c = Eigen::Vector2d(-3.0, -3.0);
    p.A = Eigen::MatrixXd(3, 2);
    p.A << 1.0, 1.0, 1.0, 1.0, 2.0, 2.0;
    p.b = Eigen::Vector3d(2.0, 2.0, 4.0);
    const Solution s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.x[0] == doctest::Approx(1.0));
    CHECK(s.x[1] == doctest::Approx(1.0));
    CHECK(kkt_residual(p, s.x, s.lambda) <= 1e-10);
  }

  TEST_CASE("badly scaled slack-style problem stays accurate")
  {
    // One input with unit weight, one slack weighted 1e6, coupled by a row.
    DenseQp p;
    p.H = Eigen::Matrix2d::Zero();
    p.H(0, 0) = 2.0;
    p.H(1, 1) = 2.0 * 4e6;
    p.c = Eigen::Vector2d(-2.0 * 1.5, 0.0);
    p.A = Eigen::MatrixXd(3, 2);
    p.A << 60.0, -1.0,  // 60 x - s <= -30
        1.0, 0.0,       // x <= 2
        0.0, -1.0;      // s >= 0
    p.b = Eigen::Vector3d(-30.0, 2.0, 0.0);
    const Solution s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    // Unit-slope minimizer of (x - 1.5)^2 + 4e6 (60 x + 30)^2.
    const double x = (1.5 - 4e6 * 60.0 * 30.0) / (1.0 + 4e6 * 3600.0);
    CHECK(s.x[0] == doctest::Approx(x).epsilon(1e-12));
    CHECK(s.x[1] == doctest::Approx(120.0 / (1.0 + 4e6 * 3600.0)).epsilon(1e-6));
    CHECK(kkt_residual(p, s.x, s.lambda) <= 1e-12);
  }
}
