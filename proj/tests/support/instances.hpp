#ifndef BARRIER_FLEET_TESTS_INSTANCES_HPP
#define BARRIER_FLEET_TESTS_INSTANCES_HPP

// Random filter instances shared by the unit tests and the acceptance runner.

#include "barrier_fleet/qp_filter.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace instances {

using namespace barrier_fleet;

struct FilterInstance
{
  ControlInput u_nom{};
  std::vector<PairwiseConstraint> rows;
  ControlBounds bounds{};
  QpWeights weights{};
  double gate_slope = 0.0;
};

class Generator
{
public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  /// Rows that all hold with margin at some admissible point.
  FilterInstance feasible()
  {
    FilterInstance f = base();
    const ControlInput inside = admissible_point(f, 0.1);
    const int m = integer(1, 4);
    for (int k = 0; k < m; ++k) {
      PairwiseConstraint r = random_row(k);
      r.b = r.a.dot(inside.vector()) + uniform(0.05, 0.5) * r.a.norm();
      f.rows.push_back(r);
    }
    return f;
  }

  /// Rows with no common admissible point: either one row misses the whole
  /// box or two opposing rows leave a gap.
  FilterInstance infeasible()
  {
    FilterInstance f = base();
    const int extra = integer(0, 2);
    const ControlInput inside = admissible_point(f, 0.1);
    for (int k = 0; k < extra; ++k) {
      PairwiseConstraint r = random_row(k);
      r.b = r.a.dot(inside.vector()) + uniform(0.0, 0.5) * r.a.norm();
      f.rows.push_back(r);
    }
    PairwiseConstraint r = random_row(extra);
    const double lo = box_floor(r.a, f);
    if (integer(0, 1) == 0) {
      r.b = lo - uniform(0.01, 1.0) * r.a.norm();
      f.rows.push_back(r);
    } else {
      // a.u <= b1 and -a.u <= b2 with b1 + b2 < 0, each satisfiable alone.
      const double hi = -box_floor(-r.a, f);
      const double cut = lo + uniform(0.2, 0.8) * (hi - lo);
      const double gap = uniform(0.01, 0.3) * (hi - lo);
      r.b = cut - gap / 2;
      PairwiseConstraint q = random_row(extra + 1);
      q.a = -r.a * uniform(0.5, 2.0);
      q.b = -(cut + gap / 2) * (q.a.norm() / r.a.norm());
      f.rows.push_back(r);
      f.rows.push_back(q);
    }
    return f;
  }

private:
  FilterInstance base()
  {
    FilterInstance f;
    f.bounds = {0.0, 2.0, 1.0, 1.0};
    if (integer(0, 2) == 0) f.bounds.thr_min = uniform(0.0, 1.0);  // reverse thrust, ungated
    const bool gated = f.bounds.thr_min == 0.0 && integer(0, 1) == 1;
    f.gate_slope = gated ? f.bounds.rud_max / (0.25 * f.bounds.thr_max) : 0.0;
    f.weights = QpWeights::for_gamma(uniform(0.5, 4.0));
    f.u_nom = {uniform(-1.5, 3.0), uniform(-1.5, 1.5)};
    return f;
  }

  ControlInput admissible_point(const FilterInstance& f, double margin)
  {
    const double thr_lo = f.gate_slope > 0.0 ? 2.0 * margin : f.bounds.thr_lo() + margin;
    const double thr = uniform(thr_lo, f.bounds.thr_hi() - margin);
    double reach = f.bounds.rud_max - margin;
    if (f.gate_slope > 0.0) reach = std::min(reach, f.gate_slope * thr - margin);
    return {thr, uniform(-reach, reach)};
  }

  /// Lowest a.u over the admissible set (its vertices).
  static double box_floor(const Eigen::Vector2d& a, const FilterInstance& f)
  {
    const auto& b = f.bounds;
    std::vector<ControlInput> vertices;
    if (f.gate_slope > 0.0) {
      const double knee = b.rud_max / f.gate_slope;
      vertices = {{0.0, 0.0}, {knee, b.rud_max}, {knee, -b.rud_max}, {b.thr_hi(), b.rud_max}, {b.thr_hi(), -b.rud_max}};
    } else {
      vertices = {{b.thr_lo(), b.rud_lo()}, {b.thr_lo(), b.rud_hi()}, {b.thr_hi(), b.rud_lo()}, {b.thr_hi(), b.rud_hi()}};
    }
    double lo = 1e300;
    for (const auto& v : vertices) lo = std::min(lo, a.dot(v.vector()));
    return lo;
  }

  PairwiseConstraint random_row(int id)
  {
    PairwiseConstraint r;
    const double angle = uniform(-3.14159, 3.14159);
    const double scale = std::exp(uniform(std::log(0.5), std::log(80.0)));
    r.a = scale * Eigen::Vector2d(std::cos(angle), std::sin(angle));
    r.contact_id = id;
    return r;
  }

  std::mt19937_64 rng_;
};

}  // namespace instances

#endif
