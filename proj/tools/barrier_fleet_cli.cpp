// barrier-fleet: batch campaigns and the real-time gateway.
//
//   barrier-fleet run [--config F] [--mode M] [--legs N] [--seed S] [--vehicles N] [--out DIR] [--table2]
//   barrier-fleet serve [--config F] [--port P]        (also: barrier-fleet --serve --port P)
//
// Exit codes: 0 ok, 2 configuration or usage error, 3 internal error.

#include "barrier_fleet/config.hpp"
#include "barrier_fleet/gateway.hpp"
#include "barrier_fleet/report.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace bf = barrier_fleet;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int)
{
  g_stop.store(true);
}

struct Overrides
{
  std::string config_path;
  std::optional<std::string> mode;
  std::optional<int> legs;
  std::optional<std::size_t> encounters;
  std::optional<std::uint64_t> seed;
  std::optional<int> vehicles;
  std::optional<std::string> out;
  std::optional<int> trajectory_legs;
};

/// Loads the config (built-in defaults without a path) and patches the
/// command-line overrides into the document before validation, so that
/// errors point at the same keys either way.
bf::ScenarioConfig load(const Overrides& o)
{
  nlohmann::json doc = o.config_path.empty() ? nlohmann::json::object() : bf::read_document(o.config_path);
  if (!doc.is_object()) throw bf::ConfigError("", "config root must be an object");
  auto& joust = doc["joust"];
  if (joust.is_null()) joust = nlohmann::json::object();
  if (!joust.is_object()) throw bf::ConfigError("/joust", "expected an object");
  if (o.mode) joust["mode"] = *o.mode;
  if (o.legs) joust["legs"] = *o.legs;
  if (o.encounters) {
    joust["legs"] = 0;
    joust["target_encounters"] = *o.encounters;
  }
  if (o.seed) joust["seed"] = *o.seed;
  if (o.vehicles) joust["n_vehicles"] = *o.vehicles;
  if (o.out || o.trajectory_legs) {
    auto& output = doc["output"];
    if (output.is_null()) output = nlohmann::json::object();
    if (!output.is_object()) throw bf::ConfigError("/output", "expected an object");
    if (o.out) output["dir"] = *o.out;
    if (o.trajectory_legs) output["trajectory_legs"] = *o.trajectory_legs;
  }
  bf::ScenarioConfig config = bf::parse_config(doc);
  for (const auto& w : config.warnings()) std::cerr << "warning: " << w << '\n';
  return config;
}

bf::MetricsSummary run_one(const bf::ScenarioConfig& config, const std::filesystem::path& dir, int workers)
{
  bf::CampaignOptions options;
  options.workers = workers;
  options.trajectory_legs = config.trajectory_legs;
  const bf::CampaignResult campaign = bf::run_campaign(config.scenario, options);
  for (const auto& path : bf::write_artifacts(dir, config, campaign)) std::cerr << "wrote " << path.string() << '\n';
  return bf::campaign_summary(config, campaign);
}

int cmd_run(const Overrides& o, bool table2, int workers)
{
  const bf::ScenarioConfig config = load(o);
  const std::filesystem::path out = config.output_dir;
  std::vector<bf::ModeRow> rows;
  if (table2) {
    for (const bf::Mode mode : {bf::Mode::ColregsOnly, bf::Mode::CbfOnly, bf::Mode::ColregsPlusCbf}) {
      bf::ScenarioConfig c = config;
      c.scenario.joust.mode = mode;
      rows.push_back({mode, run_one(c, out / bf::to_string(mode), workers)});
    }
  } else {
    rows.push_back({config.scenario.joust.mode, run_one(config, out, workers)});
  }
  std::cout << bf::comparison_table(rows);
  return 0;
}

int cmd_serve(const Overrides& o, int port, const std::string& bind, const std::string& static_dir)
{
  const bf::ScenarioConfig config = load(o);
  bf::GatewayOptions options;
  options.port = port;
  options.bind_address = bind;
  options.static_dir = static_dir;
  bf::GatewayServer server(config, options);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving on " << bind << ':' << server.port() << ", external vessel " << server.external_vessel()
            << '\n';
  server.run(g_stop);
  std::cerr << "shutting down\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Distributed worst-case CBF safety filter: joust campaigns and live gateway"};
  app.set_help_all_flag("--help-all", "Expand all help");

  Overrides o;
  bool serve_flag = false;
  int port = 8765;
  std::string bind = "127.0.0.1";
  std::string static_dir;

  app.add_option("--config", o.config_path, "Scenario config (JSON)");
  app.add_flag("--serve", serve_flag, "Run the real-time gateway");
  app.add_option("--port", port, "Gateway port (0 picks a free one)")->check(CLI::Range(0, 65535));
  app.add_option("--bind", bind, "Gateway bind address");
  app.add_option("--static", static_dir, "Directory served over HTTP by the gateway");

  auto* run = app.add_subcommand("run", "Run a batch campaign");
  bool table2 = false;
  int workers = 0;
  run->add_option("--config", o.config_path, "Scenario config (JSON)");
  run->add_option("--mode", o.mode, "colregs_only | cbf_only | colregs_plus_cbf");
  run->add_option("--legs", o.legs, "Number of legs (overrides target encounters)")->check(CLI::PositiveNumber);
  run->add_option("--encounters", o.encounters, "Run until this many encounters")->check(CLI::PositiveNumber);
  run->add_option("--seed", o.seed, "Campaign seed");
  run->add_option("--vehicles", o.vehicles, "Fleet size")->check(CLI::PositiveNumber);
  run->add_option("--out", o.out, "Output directory");
  run->add_option("--trajectory-legs", o.trajectory_legs, "Legs with a trajectory CSV")->check(CLI::NonNegativeNumber);
  run->add_option("--workers", workers, "Worker threads (default: BARRIER_FLEET_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
  run->add_flag("--table2", table2, "Run all three modes on the same seeds and print the comparison");
  run->excludes(app.get_option("--serve"));

  auto* serve = app.add_subcommand("serve", "Run the real-time gateway");
  serve->add_option("--config", o.config_path, "Scenario config (JSON)");
  serve->add_option("--port", port, "Gateway port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--bind", bind, "Gateway bind address");
  serve->add_option("--static", static_dir, "Directory served over HTTP");

  app.require_subcommand(0, 1);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(o, table2, workers);
    if (serve->parsed() || serve_flag) return cmd_serve(o, port, bind, static_dir);
    std::cerr << app.help();
    return kExitConfig;
  } catch (const bf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
