#include "barrier_fleet/metrics.hpp"

#include "oracles.hpp"

#include "doctest.h"

#include <numbers>
#include <random>

using namespace barrier_fleet;

namespace {

constexpr double kPi = std::numbers::pi;

EncounterRecord record(double min_range)
{
  EncounterRecord r;
  r.min_range = min_range;
  return r;
}

std::vector<std::vector<double>> table(const EncounterGrid& g)
{
  std::vector<std::vector<double>> t(static_cast<std::size_t>(g.bearing_bins()),
                                     std::vector<double>(static_cast<std::size_t>(g.range_bins())));
  for (int k = 0; k < g.bearing_bins(); ++k) {
    for (int r = 0; r < g.range_bins(); ++r) t[k][r] = static_cast<double>(g.at(k, r));
  }
  return t;
}

EncounterGrid random_grid(std::mt19937_64& rng, double range_bin, double bearing_bin, double max_range)
{
  EncounterGrid g(range_bin, bearing_bin, max_range);
  std::uniform_int_distribution<int> count(0, 40);
  for (int k = 0; k < g.bearing_bins(); ++k) {
    for (int r = 0; r < g.range_bins(); ++r) g.set(k, r, static_cast<std::uint64_t>(count(rng)));
  }
  return g;
}

}  // namespace

TEST_SUITE("metrics")
{
  TEST_CASE("near misses and collisions use strict thresholds")
  {
    const std::vector<EncounterRecord> recs{record(12.0), record(10.0), record(9.99), record(3.0), record(2.99)};
    const SafetyCounts s = score_safety(recs);
    CHECK(s.near_misses == 3);
    CHECK(s.collisions == 1);
  }

  TEST_CASE("efficiency averages per vehicle, then across vehicles")
  {
    std::vector<LegStats> stats;
    stats.push_back({0, 0, 110.0, 66.0, 100.0, 60.0, false});  // +10% time, +10% distance
    stats.push_back({1, 0, 130.0, 60.0, 100.0, 60.0, false});  // +30%, 0%
    stats.push_back({0, 1, 100.0, 90.0, 100.0, 60.0, false});  // 0%, +50%
    const EfficiencyScore e = score_efficiency(stats);
    CHECK(e.extra_time_pct == doctest::Approx((20.0 + 0.0) / 2));
    CHECK(e.extra_distance_pct == doctest::Approx((5.0 + 50.0) / 2));
    stats.push_back({2, 2, 1.0, 1.0, 0.0, 1.0, false});
    CHECK_THROWS_AS(score_efficiency(stats), std::invalid_argument);
  }

  TEST_CASE("bearing bins count counter-clockwise from the bow")
  {
    EncounterGrid g(0.1, 1.0, 32.0);
    CHECK(g.bearing_bins() == 360);
    CHECK(g.range_bins() == 320);
    CHECK(g.add(5.05, 0.5 * kPi / 180.0));
    CHECK(g.at(0, 50) == 1);
    CHECK(g.add(5.05, -0.5 * kPi / 180.0));
    CHECK(g.at(359, 50) == 1);
    CHECK(g.add(0.0, kPi / 2 + 1e-9));
    CHECK(g.at(90, 0) == 1);
    CHECK_FALSE(g.add(32.0, 0.0));
    CHECK(g.ignored() == 1);
  }

  TEST_CASE("binning conserves samples")
  {
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> range(0.0, 40.0), bearing(-kPi, kPi);
    std::vector<EncounterRecord> recs(20);
    std::size_t total = 0;
    for (auto& r : recs) {
      const int n = std::uniform_int_distribution<int>(0, 300)(rng);
      for (int i = 0; i < n; ++i) {
        r.relative_track.push_back({range(rng), bearing(rng), 0.1 * i});
        r.reverse_track.push_back({range(rng), bearing(rng), 0.1 * i});
      }
      total += 2 * static_cast<std::size_t>(n);
    }
    const EncounterGrid g = bin_encounters(recs);
    CHECK(g.total() + g.ignored() == total);
  }

  TEST_CASE("coverage variance of a uniform grid is exactly zero")
  {
    EncounterGrid g(0.1, 1.0, 32.0);
    for (int k = 0; k < g.bearing_bins(); ++k) {
      for (int r = 0; r < g.range_bins(); ++r) g.set(k, r, 17);
    }
    CHECK(coverage_variance(g) == 0.0);
  }

  TEST_CASE("coverage variance matches a direct transcription")
  {
    std::mt19937_64 rng(52);
    for (int i = 0; i < 5; ++i) {
      const EncounterGrid g = random_grid(rng, 1.0, 10.0, 20.0);
      CHECK(coverage_variance(g) == doctest::Approx(oracle::coverage_variance_table(table(g))).epsilon(1e-12));
    }
    EncounterGrid single(0.1, 1.0, 32.0);
    single.set(0, 0, 1);
    // One hot cell: mean profile 1/360 at r = 0, so V = (359/360)^2/360 + 359 (1/360)^2/360.
    const double expected = ((359.0 / 360) * (359.0 / 360) + 359.0 / (360.0 * 360.0)) / 360.0;
    CHECK(coverage_variance(single) == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("coverage variance is invariant to count scaling and bearing rotation")
  {
    std::mt19937_64 rng(53);
    const EncounterGrid g = random_grid(rng, 1.0, 5.0, 16.0);
    EncounterGrid scaled(1.0, 5.0, 16.0), rotated(1.0, 5.0, 16.0);
    const int nb = g.bearing_bins();
    for (int k = 0; k < nb; ++k) {
      for (int r = 0; r < g.range_bins(); ++r) {
        scaled.set(k, r, 7 * g.at(k, r));
        rotated.set((k + 13) % nb, r, g.at(k, r));
      }
    }
    CHECK(coverage_variance(scaled) == doctest::Approx(coverage_variance(g)).epsilon(1e-12));
    CHECK(coverage_variance(rotated) == doctest::Approx(coverage_variance(g)).epsilon(1e-12));
  }

  TEST_CASE("empty grid has no coverage variance")
  {
    CHECK_THROWS_AS(coverage_variance(EncounterGrid{}), EmptyGridError);
  }

  TEST_CASE("merge adds cells and rejects mismatched binning")
  {
    EncounterGrid a(1.0, 10.0, 10.0), b(1.0, 10.0, 10.0), c(0.5, 10.0, 10.0);
    a.add(1.5, 0.1);
    b.add(1.5, 0.1);
    b.add(50.0, 0.0);
    a.merge(b);
    CHECK(a.at(0, 1) == 2);
    CHECK(a.ignored() == 1);
    CHECK_THROWS_AS(a.merge(c), std::invalid_argument);
  }
}
