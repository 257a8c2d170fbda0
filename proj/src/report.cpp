#include "barrier_fleet/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace barrier_fleet {

namespace {

std::string fixed(double v, int digits)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pct(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f%%", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows)
{
  out << "t,vehicle_id,x,y,theta,u_thr_nom,u_rud_nom,u_thr_safe,u_rud_safe,slack_total,min_h\n";
  for (const auto& r : rows) {
    out << fixed(r.t, 2) << ',' << r.vehicle_id << ',' << fixed(r.state.x, 4) << ',' << fixed(r.state.y, 4) << ','
        << fixed(r.state.theta, 5) << ',' << fixed(r.u_nom.u_thr, 5) << ',' << fixed(r.u_nom.u_rud, 5) << ','
        << fixed(r.u_safe.u_thr, 5) << ',' << fixed(r.u_safe.u_rud, 5) << ',' << fixed(r.slack_total, 6) << ','
        << fixed(r.min_h, 4) << '\n';
  }
}

void write_grid_csv(std::ostream& out, const EncounterGrid& grid)
{
  out << "bearing_deg,range_m,count\n";
  for (int k = 0; k < grid.bearing_bins(); ++k) {
    for (int r = 0; r < grid.range_bins(); ++r) {
      if (const auto c = grid.at(k, r); c > 0) {
        out << fixed(k * grid.bearing_bin_size(), 2) << ',' << fixed(r * grid.range_bin_size(), 2) << ',' << c << '\n';
      }
    }
  }
}

nlohmann::json summary_json(const ScenarioConfig& config, const MetricsSummary& s, const CampaignResult& campaign)
{
  const auto& j = config.scenario.joust;
  // Rounded so that the summary does not depend on the last bits of
  // floating-point accumulation order.
  auto r6 = [](double v) { return std::stod(fixed(v, 6)); };
  return {{"mode", to_string(j.mode)},
          {"seed", j.seed},
          {"n_vehicles", j.n_vehicles},
          {"legs", campaign.legs_run},
          {"timeouts", campaign.timeouts},
          {"encounters", s.encounters},
          {"near_misses", s.near_misses},
          {"collisions", s.collisions},
          {"avg_extra_time_pct", r6(s.avg_extra_time_pct)},
          {"avg_extra_distance_pct", r6(s.avg_extra_distance_pct)},
          {"coverage_variance", r6(s.coverage_variance)},
          {"min_range", r6(s.min_range)},
          {"filtered_ticks", campaign.filtered_ticks},
          {"slacked_ticks", campaign.slacked_ticks}};
}

std::string comparison_table(const std::vector<ModeRow>& rows)
{
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %10s %11s %10s %10s %11s %9s\n", "mode", "encounters", "near_misses",
                "collisions", "extra_time", "extra_dist", "V[beta]");
  out += line;
  for (const auto& row : rows) {
    const auto& s = row.summary;
    std::snprintf(line, sizeof line, "%-18s %10zu %11zu %10zu %10s %11s %9.4f\n", to_string(row.mode).c_str(),
                  s.encounters, s.near_misses, s.collisions, pct(s.avg_extra_time_pct).c_str(),
                  pct(s.avg_extra_distance_pct).c_str(), s.coverage_variance);
    out += line;
  }
  return out;
}

EncounterGrid campaign_grid(const ScenarioConfig& config, const CampaignResult& campaign)
{
  return bin_encounters(campaign.records, config.grid.range_bin, config.grid.bearing_bin_deg, config.grid.max_range);
}

MetricsSummary campaign_summary(const ScenarioConfig& config, const CampaignResult& campaign)
{
  MetricsSummary summary = summarize(campaign);
  const EncounterGrid grid = campaign_grid(config, campaign);
  summary.coverage_variance = grid.max_count() > 0 ? coverage_variance(grid) : 0.0;
  return summary;
}

std::vector<std::filesystem::path> write_artifacts(const std::filesystem::path& dir, const ScenarioConfig& config,
                                                   const CampaignResult& campaign)
{
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;

  const EncounterGrid grid = campaign_grid(config, campaign);
  const MetricsSummary summary = campaign_summary(config, campaign);

  written.push_back(dir / "summary.json");
  write_file(written.back(), summary_json(config, summary, campaign).dump(2) + "\n");

  written.push_back(dir / "encounter_grid.csv");
  {
    std::ofstream out(written.back(), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + written.back().string());
    write_grid_csv(out, grid);
  }

  for (const auto& leg : campaign.logged_legs) {
    written.push_back(dir / ("trajectory_leg" + std::to_string(leg.leg_index) + ".csv"));
    std::ofstream out(written.back(), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + written.back().string());
    write_trajectory_csv(out, leg.trajectory);
  }
  return written;
}

}  // namespace barrier_fleet
