#ifndef BARRIER_FLEET_REPORT_HPP
#define BARRIER_FLEET_REPORT_HPP

/**
 * @file
 * @brief Campaign artifacts: trajectory CSVs, metrics summary, grid dump and
 * the three-mode comparison table.
 *
 * All writers are deterministic: numbers are printed with fixed formats and
 * JSON keys are sorted, so identical campaigns give byte-identical files.
 */

#include "barrier_fleet/config.hpp"
#include "barrier_fleet/metrics.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace barrier_fleet {

/// Columns: t, vehicle_id, x, y, theta, u_thr_nom, u_rud_nom, u_thr_safe,
/// u_rud_safe, slack_total, min_h.
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows);

/// Long format, nonzero cells only: bearing_deg, range_m, count.
void write_grid_csv(std::ostream& out, const EncounterGrid& grid);

nlohmann::json summary_json(const ScenarioConfig& config, const MetricsSummary& summary,
                            const CampaignResult& campaign);

struct ModeRow
{
  Mode mode;
  MetricsSummary summary;
};

/// Near misses, collisions, extra time, extra distance and V per mode.
std::string comparison_table(const std::vector<ModeRow>& rows);

/// Encounter grid with the configured binning.
EncounterGrid campaign_grid(const ScenarioConfig& config, const CampaignResult& campaign);

/// summarize() with V taken from the configured grid (0 for an empty grid).
MetricsSummary campaign_summary(const ScenarioConfig& config, const CampaignResult& campaign);

/// Writes summary.json, encounter_grid.csv and trajectory_leg<k>.csv under dir.
/// Returns the files written.
std::vector<std::filesystem::path> write_artifacts(const std::filesystem::path& dir, const ScenarioConfig& config,
                                                   const CampaignResult& campaign);

}  // namespace barrier_fleet

#endif
