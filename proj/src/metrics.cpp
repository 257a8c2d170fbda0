#include "barrier_fleet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace barrier_fleet {

SafetyCounts score_safety(const std::vector<EncounterRecord>& records)
{
  SafetyCounts out;
  for (const auto& r : records) {
    if (r.min_range < kNearMissRange) ++out.near_misses;
    if (r.min_range < kCollisionRange) ++out.collisions;
  }
  return out;
}

EfficiencyScore score_efficiency(const std::vector<LegStats>& stats)
{
  struct Acc
  {
    double time = 0.0;
    double distance = 0.0;
    int legs = 0;
  };
  std::map<int, Acc> per_vehicle;
  for (const auto& s : stats) {
    if (!(s.baseline_time > 0.0 && s.baseline_distance > 0.0)) {
      throw std::invalid_argument("score_efficiency: baselines must be positive");
    }
    auto& acc = per_vehicle[s.vehicle_id];
    acc.time += 100.0 * (s.time - s.baseline_time) / s.baseline_time;
    acc.distance += 100.0 * (s.distance - s.baseline_distance) / s.baseline_distance;
    ++acc.legs;
  }
  EfficiencyScore out;
  if (per_vehicle.empty()) return out;
  for (const auto& [id, acc] : per_vehicle) {
    out.extra_time_pct += acc.time / acc.legs;
    out.extra_distance_pct += acc.distance / acc.legs;
  }
  out.extra_time_pct /= static_cast<double>(per_vehicle.size());
  out.extra_distance_pct /= static_cast<double>(per_vehicle.size());
  return out;
}

EncounterGrid::EncounterGrid(double range_bin_size, double bearing_bin_size_deg, double max_range)
  : range_bin_(range_bin_size),
    bearing_bin_(bearing_bin_size_deg),
    max_range_(max_range),
    n_bearing_(static_cast<int>(std::lround(360.0 / bearing_bin_size_deg))),
    n_range_(static_cast<int>(std::lround(max_range / range_bin_size)))
{
  if (!(range_bin_size > 0.0 && bearing_bin_size_deg > 0.0 && max_range > 0.0)) {
    throw std::invalid_argument("EncounterGrid: bin sizes and max_range must be positive");
  }
  counts_.assign(static_cast<std::size_t>(n_bearing_) * static_cast<std::size_t>(n_range_), 0);
}

bool EncounterGrid::add(double range, double bearing_rad, std::uint64_t count)
{
  if (!(range >= 0.0) || range >= max_range_) {
    ignored_ += count;
    return false;
  }
  double deg = bearing_rad * 180.0 / std::numbers::pi;
  deg = std::fmod(deg, 360.0);
  if (deg < 0.0) deg += 360.0;
  const int kb = std::min(n_bearing_ - 1, static_cast<int>(std::floor(deg / bearing_bin_)));
  const int kr = std::min(n_range_ - 1, static_cast<int>(std::floor(range / range_bin_)));
  counts_[static_cast<std::size_t>(kb) * static_cast<std::size_t>(n_range_) + static_cast<std::size_t>(kr)] += count;
  return true;
}

std::uint64_t EncounterGrid::at(int bearing_bin, int range_bin) const
{
  return counts_.at(static_cast<std::size_t>(bearing_bin) * static_cast<std::size_t>(n_range_) +
                    static_cast<std::size_t>(range_bin));
}

void EncounterGrid::set(int bearing_bin, int range_bin, std::uint64_t count)
{
  counts_.at(static_cast<std::size_t>(bearing_bin) * static_cast<std::size_t>(n_range_) +
             static_cast<std::size_t>(range_bin)) = count;
}

std::uint64_t EncounterGrid::total() const
{
  std::uint64_t sum = 0;
  for (const auto c : counts_) sum += c;
  return sum;
}

std::uint64_t EncounterGrid::max_count() const
{
  return counts_.empty() ? 0 : *std::max_element(counts_.begin(), counts_.end());
}

void EncounterGrid::merge(const EncounterGrid& other)
{
  if (other.n_bearing_ != n_bearing_ || other.n_range_ != n_range_) {
    throw std::invalid_argument("EncounterGrid::merge: binning mismatch");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  ignored_ += other.ignored_;
}

EncounterGrid bin_encounters(const std::vector<EncounterRecord>& records, double range_bin_size,
                             double bearing_bin_size_deg, double max_range)
{
  EncounterGrid grid(range_bin_size, bearing_bin_size_deg, max_range);
  for (const auto& r : records) {
    for (const auto& s : r.relative_track) grid.add(s.range, s.bearing);
    for (const auto& s : r.reverse_track) grid.add(s.range, s.bearing);
  }
  return grid;
}

double coverage_variance(const EncounterGrid& grid)
{
  const std::uint64_t peak = grid.max_count();
  if (peak == 0) throw EmptyGridError();
  const double scale = 1.0 / static_cast<double>(peak);
  const int nb = grid.bearing_bins();
  const int nr = grid.range_bins();

  std::vector<double> mean(static_cast<std::size_t>(nr), 0.0);
  for (int k = 0; k < nb; ++k) {
    for (int r = 0; r < nr; ++r) mean[static_cast<std::size_t>(r)] += static_cast<double>(grid.at(k, r)) * scale;
  }
  for (auto& m : mean) m /= nb;

  double sum = 0.0;
  for (int k = 0; k < nb; ++k) {
    for (int r = 0; r < nr; ++r) {
      const double d = static_cast<double>(grid.at(k, r)) * scale - mean[static_cast<std::size_t>(r)];
      sum += d * d;
    }
  }
  return sum / nb;
}

MetricsSummary summarize(const CampaignResult& campaign)
{
  MetricsSummary out;
  const SafetyCounts safety = score_safety(campaign.records);
  out.near_misses = safety.near_misses;
  out.collisions = safety.collisions;
  out.encounters = campaign.records.size();
  const EfficiencyScore eff = score_efficiency(campaign.leg_stats);
  out.avg_extra_time_pct = eff.extra_time_pct;
  out.avg_extra_distance_pct = eff.extra_distance_pct;
  const EncounterGrid grid = bin_encounters(campaign.records);
  out.coverage_variance = grid.max_count() > 0 ? coverage_variance(grid) : 0.0;
  out.min_range = std::numeric_limits<double>::infinity();
  for (const auto& r : campaign.records) out.min_range = std::min(out.min_range, r.min_range);
  if (campaign.records.empty()) out.min_range = 0.0;
  return out;
}

}  // namespace barrier_fleet
