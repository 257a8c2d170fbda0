#include "barrier_fleet/report.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace barrier_fleet;

namespace {

std::string slurp(const std::filesystem::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch_dir(const std::string& name)
{
  const auto dir = std::filesystem::temp_directory_path() / ("barrier_fleet_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE("report")
{
  TEST_CASE("trajectory CSV has the documented header and fixed formats")
  {
    TrajectoryRow row;
    row.t = 1.2;
    row.vehicle_id = 3;
    row.state = {1.0, -2.5, 0.25};
    row.u_nom = {1.5, 0.1};
    row.u_safe = {1.25, -0.2};
    row.slack_total = 0.0;
    row.min_h = 400.0;
    std::ostringstream out;
    write_trajectory_csv(out, {row});
    CHECK(out.str() ==
          "t,vehicle_id,x,y,theta,u_thr_nom,u_rud_nom,u_thr_safe,u_rud_safe,slack_total,min_h\n"
          "1.20,3,1.0000,-2.5000,0.25000,1.50000,0.10000,1.25000,-0.20000,0.000000,400.0000\n");
  }

  TEST_CASE("grid CSV lists nonzero cells in bearing-major order")
  {
    EncounterGrid g(0.5, 90.0, 2.0);
    g.set(1, 2, 4);
    g.set(0, 3, 1);
    std::ostringstream out;
    write_grid_csv(out, g);
    CHECK(out.str() == "bearing_deg,range_m,count\n0.00,1.50,1\n90.00,1.00,4\n");
  }

  TEST_CASE("artifacts are byte-identical across reruns and worker counts")
  {
    ScenarioConfig config;
    config.scenario.joust.n_legs = 4;
    config.scenario.joust.seed = 17;
    config.trajectory_legs = 1;
    const auto a = scratch_dir("a");
    const auto b = scratch_dir("b");
    const auto files_a = write_artifacts(a, config, run_campaign(config.scenario, {1, 1, 1000}));
    const auto files_b = write_artifacts(b, config, run_campaign(config.scenario, {2, 1, 1000}));
    REQUIRE(files_a.size() == 3);
    REQUIRE(files_b.size() == 3);
    for (std::size_t i = 0; i < files_a.size(); ++i) {
      CHECK(files_a[i].filename() == files_b[i].filename());
      CHECK(slurp(files_a[i]) == slurp(files_b[i]));
    }
    const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
    CHECK(summary["mode"] == "colregs_plus_cbf");
    CHECK(summary["legs"] == 4);
    CHECK(summary["seed"] == 17);
    for (const char* key : {"near_misses", "collisions", "encounters", "avg_extra_time_pct",
                            "avg_extra_distance_pct", "coverage_variance", "min_range"}) {
      CHECK(summary.contains(key));
    }
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
  }

  TEST_CASE("comparison table has one row per mode")
  {
    MetricsSummary s;
    s.encounters = 1000;
    s.near_misses = 12;
    s.avg_extra_time_pct = 5.25;
    s.avg_extra_distance_pct = -1.0;
    s.coverage_variance = 0.125;
    const std::string t = comparison_table({{Mode::ColregsOnly, s}, {Mode::CbfOnly, s}});
    std::istringstream lines(t);
    std::string header, first, second, extra;
    std::getline(lines, header);
    std::getline(lines, first);
    std::getline(lines, second);
    CHECK_FALSE(std::getline(lines, extra));
    CHECK(header.find("near_misses") != std::string::npos);
    CHECK(first.rfind("colregs_only", 0) == 0);
    CHECK(first.find("+5.2%") != std::string::npos);
    CHECK(first.find("-1.0%") != std::string::npos);
    CHECK(first.find("0.1250") != std::string::npos);
    CHECK(second.rfind("cbf_only", 0) == 0);
  }
}
