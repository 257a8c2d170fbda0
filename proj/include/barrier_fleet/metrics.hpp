#ifndef BARRIER_FLEET_METRICS_HPP
#define BARRIER_FLEET_METRICS_HPP

#include "barrier_fleet/sim.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace barrier_fleet {

constexpr double kNearMissRange = 10.0;
constexpr double kCollisionRange = 3.0;

struct SafetyCounts
{
  std::size_t near_misses = 0;
  std::size_t collisions = 0;
};

/// Strict inequalities: near miss below 10 m, collision below 3 m (also a near miss).
SafetyCounts score_safety(const std::vector<EncounterRecord>& records);

struct EfficiencyScore
{
  double extra_time_pct = 0.0;
  double extra_distance_pct = 0.0;
};

/// 100 (actual - baseline) / baseline, averaged over legs per vehicle and then
/// over vehicles. Throws std::invalid_argument on a non-positive baseline.
EfficiencyScore score_efficiency(const std::vector<LegStats>& stats);

/// Range x bearing histogram of contact positions in the viewer's frame.
/// Bearing bin k covers [k, k+1) degrees measured counter-clockwise from the
/// bow over [0, 360).
class EncounterGrid
{
public:
  explicit EncounterGrid(double range_bin_size = 0.1, double bearing_bin_size_deg = 1.0, double max_range = 32.0);

  double range_bin_size() const { return range_bin_; }
  double bearing_bin_size() const { return bearing_bin_; }
  double max_range() const { return max_range_; }
  int bearing_bins() const { return n_bearing_; }
  int range_bins() const { return n_range_; }

  /// Returns false (and counts the sample as ignored) beyond max_range.
  bool add(double range, double bearing_rad, std::uint64_t count = 1);
  std::uint64_t at(int bearing_bin, int range_bin) const;
  void set(int bearing_bin, int range_bin, std::uint64_t count);
  std::uint64_t total() const;
  std::uint64_t ignored() const { return ignored_; }
  std::uint64_t max_count() const;

  /// Cell-wise sum; grids must share the same binning.
  void merge(const EncounterGrid& other);

private:
  double range_bin_;
  double bearing_bin_;
  double max_range_;
  int n_bearing_;
  int n_range_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t ignored_ = 0;
};

/// Bins both views of every track sample.
EncounterGrid bin_encounters(const std::vector<EncounterRecord>& records, double range_bin_size = 0.1,
                             double bearing_bin_size_deg = 1.0, double max_range = 32.0);

class EmptyGridError : public std::runtime_error
{
public:
  EmptyGridError() : std::runtime_error("coverage variance of an empty encounter grid") {}
};

/// Mean over bearings of the squared Euclidean distance between each radial
/// profile and the bearing-averaged profile, with all cells normalized by the
/// largest cell count.
double coverage_variance(const EncounterGrid& grid);

struct MetricsSummary
{
  std::size_t near_misses = 0;
  std::size_t collisions = 0;
  std::size_t encounters = 0;
  double avg_extra_time_pct = 0.0;
  double avg_extra_distance_pct = 0.0;
  double coverage_variance = 0.0;
  double min_range = 0.0;
};

MetricsSummary summarize(const CampaignResult& campaign);

}  // namespace barrier_fleet

#endif
