// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `--seeds N` shortens the campaign part for local runs.

#include "barrier_fleet/behaviors.hpp"
#include "barrier_fleet/config.hpp"
#include "barrier_fleet/metrics.hpp"
#include "barrier_fleet/qp_filter.hpp"
#include "barrier_fleet/report.hpp"
#include "barrier_fleet/sim.hpp"

#include "instances.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

using namespace barrier_fleet;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict
{
  std::string id;
  bool pass = false;
  std::string detail;
};

std::vector<Verdict> g_verdicts;

void report(const std::string& id, bool pass, const std::string& detail)
{
  g_verdicts.push_back({id, pass, detail});
  std::printf("%s %s  %s\n", id.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string format(const char* fmt, ...)
{
  char buf[1024];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Campaign criteria

struct CampaignRow
{
  MetricsSummary summary;
  double seconds = 0.0;
  std::string summary_json;
};

using CampaignTable = std::map<std::pair<int, Mode>, CampaignRow>;

CampaignTable run_campaigns(int seeds)
{
  CampaignTable table;
  for (int seed = 0; seed < seeds; ++seed) {
    for (const Mode mode : {Mode::ColregsOnly, Mode::CbfOnly, Mode::ColregsPlusCbf}) {
      ScenarioConfig config;
      config.scenario.joust.mode = mode;
      config.scenario.joust.seed = static_cast<std::uint64_t>(seed);
      config.scenario.joust.n_legs = 0;
      config.scenario.joust.target_encounters = 1000;
      const auto start = std::chrono::steady_clock::now();
      const CampaignResult campaign = run_campaign(config.scenario, {0, 0, 1000000});
      CampaignRow row;
      row.seconds = seconds_since(start);
      row.summary = campaign_summary(config, campaign);
      table[{seed, mode}] = row;
      std::printf("   seed %d %-17s enc %4zu  near %3zu  coll %2zu  extra dist %+6.1f%%  V %.4f  (%.0f s)\n", seed,
                  to_string(mode).c_str(), row.summary.encounters, row.summary.near_misses, row.summary.collisions,
                  row.summary.avg_extra_distance_pct, row.summary.coverage_variance, row.seconds);
      std::fflush(stdout);
    }
  }
  return table;
}

void check_a1(const CampaignTable& t, int seeds)
{
  std::size_t collisions = 0;
  double min_range = 1e300;
  double slowest = 0.0;
  for (int s = 0; s < seeds; ++s) {
    for (const Mode m : {Mode::CbfOnly, Mode::ColregsPlusCbf}) {
      const auto& row = t.at({s, m});
      collisions += row.summary.collisions;
      min_range = std::min(min_range, row.summary.min_range);
    }
  }
  for (const auto& [key, row] : t) slowest = std::max(slowest, row.seconds);
  report("A1", collisions == 0 && slowest < 600.0,
         format("collisions in CBF modes over %d seeds: %zu (need 0); closest pass %.2f m; slowest campaign %.0f s "
                "(need < 600)",
                seeds, collisions, min_range, slowest));
}

void check_a2(const CampaignTable& t, int seeds)
{
  int first = 0, second = 0;
  std::string counts;
  for (int s = 0; s < seeds; ++s) {
    const auto co = t.at({s, Mode::ColregsOnly}).summary.near_misses;
    const auto cb = t.at({s, Mode::CbfOnly}).summary.near_misses;
    const auto both = t.at({s, Mode::ColregsPlusCbf}).summary.near_misses;
    first += co > cb;
    second += cb > both;
    counts += format("%s%zu/%zu/%zu", s ? " " : "", co, cb, both);
  }
  const int need = (8 * seeds + 9) / 10;
  report("A2", first >= need && second >= need,
         format("colregs_only > cbf_only on %d/%d seeds, cbf_only > colregs_plus_cbf on %d/%d (need >= %d each); "
                "near misses per seed [%s]",
                first, seeds, second, seeds, need, counts.c_str()));
}

void check_a3(const CampaignTable& t, int seeds)
{
  int wins = 0;
  double cb = 0.0, both = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const double a = t.at({s, Mode::CbfOnly}).summary.avg_extra_distance_pct;
    const double b = t.at({s, Mode::ColregsPlusCbf}).summary.avg_extra_distance_pct;
    wins += a > b;
    cb += a / seeds;
    both += b / seeds;
  }
  const int need = (8 * seeds + 9) / 10;
  report("A3", wins >= need,
         format("cbf_only extra distance > colregs_plus_cbf on %d/%d seeds (need >= %d); means %+.1f%% vs %+.1f%%",
                wins, seeds, need, cb, both));
}

void check_a8(const CampaignTable& t, int seeds)
{
  EncounterGrid uniform(0.1, 1.0, 32.0);
  for (int k = 0; k < uniform.bearing_bins(); ++k) {
    for (int r = 0; r < uniform.range_bins(); ++r) uniform.set(k, r, 42);
  }
  const double v_uniform = coverage_variance(uniform);

  std::map<Mode, std::pair<double, double>> range;
  int outside = 0;
  for (int s = 0; s < seeds; ++s) {
    for (const Mode m : {Mode::ColregsOnly, Mode::CbfOnly, Mode::ColregsPlusCbf}) {
      const double v = t.at({s, m}).summary.coverage_variance;
      auto [it, fresh] = range.try_emplace(m, v, v);
      it->second.first = std::min(it->second.first, v);
      it->second.second = std::max(it->second.second, v);
      outside += !(v >= 0.01 && v <= 1.0);
    }
  }
  std::string per_mode;
  for (const auto& [m, r] : range) per_mode += format(" %s [%.4f, %.4f]", to_string(m).c_str(), r.first, r.second);
  report("A8", v_uniform == 0.0 && outside == 0,
         format("uniform grid V = %g (need exactly 0); campaign V outside [0.01, 1.0]: %d of %d;%s", v_uniform,
                outside, 3 * seeds, per_mode.c_str()));
}

void check_a9()
{
  int mismatches = 0;
  std::string sizes;
  for (const Mode mode : {Mode::ColregsOnly, Mode::CbfOnly, Mode::ColregsPlusCbf}) {
    ScenarioConfig config;
    config.scenario.joust.mode = mode;
    config.scenario.joust.seed = 7;
    config.scenario.joust.n_legs = 0;
    config.scenario.joust.target_encounters = 150;
    std::string reference;
    for (const int workers : {1, 2, 4}) {
      const CampaignResult campaign = run_campaign(config.scenario, {workers, 0, 1000000});
      const std::string text = summary_json(config, campaign_summary(config, campaign), campaign).dump(2);
      if (workers == 1) reference = text;
      else mismatches += text != reference;
    }
    sizes += format(" %s %zu B", to_string(mode).c_str(), reference.size());
  }
  report("A9", mismatches == 0,
         format("summaries differing from the 1-worker run (2 and 4 workers, three modes): %d;%s", mismatches,
                sizes.c_str()));
}

// ---------------------------------------------------------------------------
// Property and oracle criteria

void check_a4()
{
  // Ego dominates the contact: its box contains the contact's and it
  // satisfies gamma * rud_max >= thr_max.
  VehicleSpec ego_spec;
  ego_spec.bounds = {2.0, 2.0, 1.0, 1.0};
  ego_spec.rudder_gate_threshold = 0.0;
  VehicleSpec contact_spec;
  contact_spec.bounds = {0.0, 1.0, 0.5, 0.5};
  contact_spec.rudder_gate_threshold = 0.0;
  const BarrierParams params;
  const QpWeights weights = QpWeights::for_gamma(ego_spec.gamma);
  const double dt = 0.1;
  const int ticks = 2000;  // 200 s

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 1e300;
  int failures = 0;
  for (int episode = 0; episode < 100; ++episode) {
    VehicleState ego{0.0, 0.0, kPi * (2.0 * unit(rng) - 1.0)};
    const double r0 = 15.05 + 25.0 * unit(rng);
    const double bearing = 2.0 * kPi * unit(rng);
    VehicleState contact{r0 * std::cos(bearing), r0 * std::sin(bearing), kPi * (2.0 * unit(rng) - 1.0)};
    double lowest = h_pair(ego, contact, ego_spec.r_safe);
    for (int k = 0; k < ticks; ++k) {
      const ContactView view{1, contact, contact_spec.bounds, contact_spec.gamma, true};
      // The ego's nominal controller drives straight at the contact.
      const WaypointGoal chase{contact.position(), ego_spec.bounds.thr_max, 2.0};
      const ControlInput nominal = waypoint_control(ego, chase, 1.0, ego_spec);
      const FilterResult safe = filter(nominal, ego, ego_spec, {view}, params, weights);
      const ControlInput attack = worst_case_input(view, ego);
      const VehicleState next_ego = step(ego, clamp(safe.u_safe, ego_spec), Eigen::Vector2d::Zero(), dt, ego_spec.gamma);
      contact = step(contact, attack, Eigen::Vector2d::Zero(), dt, contact_spec.gamma);
      ego = next_ego;
      lowest = std::min(lowest, h_pair(ego, contact, ego_spec.r_safe));
    }
    worst = std::min(worst, lowest);
    failures += lowest < -1e-3;
  }
  report("A4", failures == 0,
         format("episodes with h < -1e-3 m^2: %d of 100 (200 s each); lowest h %.6g m^2", failures, worst));
}

void check_a5()
{
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> pos(-60.0, 60.0), angle(-kPi, kPi), gamma(0.5, 5.0);
  auto centi = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng) / 100.0; };
  double worst = 0.0;
  int failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const VehicleState ego{pos(rng), pos(rng), angle(rng)};
    ContactView c;
    c.state = {pos(rng), pos(rng), angle(rng)};
    c.gamma = gamma(rng);
    c.bounds = {centi(0, 100), centi(10, 250), centi(0, 100), centi(0, 100)};
    const double err = std::abs(zeta_min(c, ego) - oracle::zeta_min_grid(c, ego, 0.01));
    worst = std::max(worst, err);
    failures += err > 1e-6;
  }
  report("A5", failures == 0,
         format("closed form vs 0.01 grid on 10000 instances: %d beyond 1e-6, max |diff| %.3g", failures, worst));
}

void check_a6()
{
  instances::Generator gen(66);
  double worst_u = 0.0, worst_kkt = 0.0;
  int failures = 0, slacked = 0;
  for (int i = 0; i < 250; ++i) {
    const bool feasible = i < 200;
    const auto f = feasible ? gen.feasible() : gen.infeasible();
    const FilterResult out = solve_qp(f.u_nom, f.rows, f.bounds, f.weights, f.gate_slope);
    const auto ref = oracle::reference_filter(f.u_nom, f.rows, f.bounds, f.weights, f.gate_slope);
    const double du = std::max(std::abs(out.u_safe.u_thr - ref.u.u_thr), std::abs(out.u_safe.u_rud - ref.u.u_rud));
    worst_u = std::max(worst_u, du);
    worst_kkt = std::max(worst_kkt, out.kkt_residual);
    slacked += !out.slacks.empty();
    failures += du > 1e-3 || out.kkt_residual > 1e-8 || (feasible != out.slacks.empty());
  }
  report("A6", failures == 0,
         format("200 feasible + 50 infeasible instances: %d failures; max |u - ref| %.3g (need <= 1e-3), max KKT "
                "residual %.3g (need <= 1e-8), slacked %d/50",
                failures, worst_u, worst_kkt, slacked));
}

void check_a7()
{
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pos(-60.0, 60.0), angle(-kPi, kPi), gamma(0.5, 5.0);
  double worst = 0.0;
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const VehicleState ego{pos(rng), pos(rng), angle(rng)};
    const VehicleState other{pos(rng), pos(rng), angle(rng)};
    const double g = gamma(rng);
    const Eigen::Vector2d an = lie_derivative_ego(ego, other, g);
    const Eigen::Vector2d fd = oracle::fd_lie_derivative(ego, other, g, 15.0, 1e-6);
    const ContactView view{1, other, {}, g, true};
    const Eigen::Vector2d anc = lie_derivative_contact(ego, view);
    const Eigen::Vector2d fdc = oracle::fd_lie_derivative(other, ego, g, 15.0, 1e-6);
    const double rel = std::max((an - fd).norm() / an.norm(), (anc - fdc).norm() / anc.norm());
    worst = std::max(worst, rel);
    failures += rel > 1e-5;
  }
  report("A7", failures == 0,
         format("ego and contact Lie derivatives vs central differences (eps 1e-6) on 1000 states: %d beyond 1e-5, "
                "max rel. error %.3g",
                failures, worst));
}

}  // namespace

int main(int argc, char** argv)
{
  int seeds = 10;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::strcmp(argv[i], "--seeds") == 0) seeds = std::max(1, std::atoi(argv[i + 1]));
  }
  std::printf("acceptance: %d seed(s), %d worker(s)\n", seeds, default_workers());

  const auto start = std::chrono::steady_clock::now();
  check_a4();
  check_a5();
  check_a6();
  check_a7();

  const CampaignTable table = run_campaigns(seeds);
  check_a1(table, seeds);
  check_a2(table, seeds);
  check_a3(table, seeds);
  check_a8(table, seeds);
  check_a9();

  std::sort(g_verdicts.begin(), g_verdicts.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
  int failed = 0;
  std::printf("\nsummary (%.0f s):\n", seconds_since(start));
  for (const auto& v : g_verdicts) {
    std::printf("%s %s\n", v.id.c_str(), v.pass ? "PASS" : "FAIL");
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
