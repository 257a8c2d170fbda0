#include "barrier_fleet/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

namespace barrier_fleet {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Portable uniform draw; std::uniform_real_distribution is not bit-stable
// across standard libraries.
class Uniform
{
public:
  explicit Uniform(std::uint64_t seed) : engine_(seed) {}
  double operator()(double lo, double hi)
  {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace

std::string to_string(Mode mode)
{
  switch (mode) {
    case Mode::ColregsOnly: return "colregs_only";
    case Mode::CbfOnly: return "cbf_only";
    case Mode::ColregsPlusCbf: return "colregs_plus_cbf";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& name)
{
  if (name == "colregs_only") return Mode::ColregsOnly;
  if (name == "cbf_only") return Mode::CbfOnly;
  if (name == "colregs_plus_cbf") return Mode::ColregsPlusCbf;
  throw std::invalid_argument("unknown mode '" + name + "' (expected colregs_only, cbf_only or colregs_plus_cbf)");
}

bool uses_behaviors(Mode mode) { return mode != Mode::CbfOnly; }
bool uses_filter(Mode mode) { return mode != Mode::ColregsOnly; }

std::string to_string(Policy policy)
{
  switch (policy) {
    case Policy::Autonomous: return "autonomous";
    case Policy::StraightLine: return "straight_line";
    case Policy::External: return "external";
    case Policy::WorstCase: return "worst_case";
  }
  return "unknown";
}

Policy policy_from_string(const std::string& name)
{
  if (name == "autonomous") return Policy::Autonomous;
  if (name == "straight_line") return Policy::StraightLine;
  if (name == "external") return Policy::External;
  if (name == "worst_case") return Policy::WorstCase;
  throw std::invalid_argument("unknown policy '" + name + "'");
}

Scenario Scenario::defaults(int n_vehicles)
{
  Scenario s;
  s.joust.n_vehicles = n_vehicles;
  s.vessels.assign(static_cast<std::size_t>(n_vehicles), VesselConfig{});
  return s;
}

QpWeights Scenario::weights_for(std::size_t vessel) const
{
  return params.weights ? *params.weights : QpWeights::for_gamma(vessels.at(vessel).spec.gamma);
}

std::uint64_t leg_stream_seed(std::uint64_t seed, std::uint64_t leg_index)
{
  return splitmix64(splitmix64(seed) ^ (leg_index * 0xd1342543de82ef95ULL + 1));
}

LegPlan spawn_leg(const Scenario& scenario, int leg_index)
{
  const auto& j = scenario.joust;
  const int n = static_cast<int>(scenario.vessels.size());
  if (n < 1) throw std::invalid_argument("spawn_leg: no vessels configured");

  Uniform draw(leg_stream_seed(j.seed, static_cast<std::uint64_t>(leg_index)));
  const double rotation = j.randomize_rotation ? draw(0.0, 2.0 * kPi) : 0.0;
  const double radius = 0.5 * j.circle_diameter;
  const double longest = j.timeout_factor * j.circle_diameter / std::max(j.speed_range[0], 1e-3);
  const auto periods = static_cast<std::size_t>(std::ceil(longest / j.speed_reset_period)) + 2;

  LegPlan plan;
  plan.leg_index = leg_index;
  for (int i = 0; i < n; ++i) {
    const double angle = rotation + 2.0 * kPi * i / n;
    VesselStart v;
    v.pose = {radius * std::cos(angle), radius * std::sin(angle), wrap_angle(angle + kPi)};
    v.goal.target = -v.pose.position();
    v.goal.capture_radius = scenario.params.capture_radius;
    for (std::size_t k = 0; k < periods; ++k) v.speed_schedule.push_back(draw(j.speed_range[0], j.speed_range[1]));
    v.goal.desired_speed = v.speed_schedule.front();
    const double magnitude = draw(j.disturbance_range[0], j.disturbance_range[1]);
    const double direction = draw(0.0, 2.0 * kPi);
    v.disturbance = magnitude * Eigen::Vector2d(std::cos(direction), std::sin(direction));
    plan.vessels.push_back(std::move(v));
  }
  return plan;
}

FleetSim::FleetSim(const Scenario& scenario, LegPlan plan)
  : scenario_(scenario), plan_(std::move(plan))
{
  if (plan_.vessels.size() != scenario_.vessels.size()) {
    throw std::invalid_argument("FleetSim: plan and scenario disagree on vessel count");
  }
  for (const auto& v : plan_.vessels) states_.push_back(v.pose);
  previous_ = states_;
  const std::size_t n = states_.size();
  arrived_.assign(n, false);
  arrival_time_.assign(n, 0.0);
  distance_.assign(n, 0.0);
  last_.assign(n, VesselTick{});
}

bool FleetSim::all_arrived() const
{
  for (std::size_t i = 0; i < states_.size(); ++i) {
    const Policy p = scenario_.vessels[i].policy;
    if ((p == Policy::Autonomous || p == Policy::StraightLine) && !arrived_[i]) return false;
  }
  return true;
}

double FleetSim::nominal_speed(int vessel) const
{
  const auto& schedule = plan_.vessels[static_cast<std::size_t>(vessel)].speed_schedule;
  const auto k = static_cast<std::size_t>(std::floor(time_ / scenario_.joust.speed_reset_period));
  return schedule[std::min(k, schedule.size() - 1)];
}

ControlInput FleetSim::nominal(std::size_t i, const std::vector<ContactView>& contacts,
                               const std::function<std::optional<ControlInput>(int)>& external) const
{
  const auto& vessel = scenario_.vessels[i];
  const auto& params = scenario_.params;
  WaypointGoal goal = plan_.vessels[i].goal;
  goal.desired_speed = nominal_speed(static_cast<int>(i));

  switch (vessel.policy) {
    case Policy::External: {
      if (external) {
        if (auto u = external(static_cast<int>(i))) return *u;
      }
      return {};
    }
    case Policy::StraightLine:
      return waypoint_control(states_[i], goal, params.heading_gain, vessel.spec);
    case Policy::WorstCase: {
      std::size_t nearest = i;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < states_.size(); ++k) {
        if (k == i) continue;
        const double d = (states_[k].position() - states_[i].position()).squaredNorm();
        if (d < best) {
          best = d;
          nearest = k;
        }
      }
      if (nearest == i) return {};
      const ContactView self{static_cast<int>(i), states_[i], vessel.spec.bounds, vessel.spec.gamma, true};
      return worst_case_input(self, states_[nearest]);
    }
    case Policy::Autonomous:
      break;
  }

  if (!uses_behaviors(scenario_.joust.mode)) {
    return waypoint_control(states_[i], goal, params.heading_gain, vessel.spec);
  }
  std::vector<TrackedContact> tracked;
  tracked.reserve(contacts.size());
  const double dt = scenario_.joust.dt;
  for (const auto& c : contacts) {
    const auto k = static_cast<std::size_t>(c.id);
    tracked.push_back({c, (states_[k].position() - previous_[k].position()) / dt});
  }
  const CandidateGrid grid = CandidateGrid::standard(vessel.spec.bounds.thr_max);
  return blend(states_[i], vessel.spec, goal, tracked, params.colregs, grid, params.heading_gain);
}

void FleetSim::tick(const std::function<std::optional<ControlInput>(int)>& external)
{
  const std::size_t n = states_.size();
  const auto& params = scenario_.params;
  const double dt = scenario_.joust.dt;

  constraints_.clear();
  std::vector<ControlInput> applied(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& vessel = scenario_.vessels[i];
    std::vector<ContactView> contacts;
    VesselTick out;
    out.min_h = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      const auto& other = scenario_.vessels[k].spec;
      contacts.push_back({static_cast<int>(k), states_[k], other.bounds, other.gamma, !params.unknown_heading_fallback});
      const double h = h_pair(states_[i], states_[k], vessel.spec.r_safe);
      out.min_h = std::min(out.min_h, h);
      constraints_.push_back({static_cast<int>(i), static_cast<int>(k), h});
    }
    if (contacts.empty()) out.min_h = 0.0;

    if (arrived_[i]) {
      last_[i] = out;
      continue;
    }

    out.u_nom = nominal(i, contacts, external);
    out.u_safe = out.u_nom;
    if (vessel.policy == Policy::Autonomous && uses_filter(scenario_.joust.mode)) {
      const FilterResult fr = filter(out.u_nom, states_[i], vessel.spec, contacts, params.barrier,
                                     scenario_.weights_for(i));
      out.u_safe = fr.u_safe;
      out.filtered = fr.modified;
      out.slacked = !fr.slacks.empty();
      out.slack_total = fr.total_slack();
    }
    const double gate = vessel.policy == Policy::WorstCase ? 0.0 : vessel.spec.rudder_gate_threshold;
    out.u_applied = clamp(out.u_safe, vessel.spec.bounds, gate);
    applied[i] = out.u_applied;
    last_[i] = out;
  }

  previous_ = states_;
  for (std::size_t i = 0; i < n; ++i) {
    if (arrived_[i]) continue;
    const auto& start = plan_.vessels[i];
    states_[i] = step(states_[i], applied[i], start.disturbance, dt, scenario_.vessels[i].spec.gamma);
    distance_[i] += (states_[i].position() - previous_[i].position()).norm();
    const Policy p = scenario_.vessels[i].policy;
    const bool seeks_goal = p == Policy::Autonomous || p == Policy::StraightLine;
    if (seeks_goal && (states_[i].position() - start.goal.target).norm() <= start.goal.capture_radius) {
      arrived_[i] = true;
      arrival_time_[i] = time_ + dt;
    }
  }
  time_ += dt;
}

std::pair<double, double> baseline_traversal(const Scenario& scenario, const LegPlan& plan, int vessel)
{
  Scenario solo = scenario;
  solo.vessels = {scenario.vessels.at(static_cast<std::size_t>(vessel))};
  solo.vessels.front().policy = Policy::StraightLine;
  LegPlan solo_plan;
  solo_plan.leg_index = plan.leg_index;
  solo_plan.vessels = {plan.vessels.at(static_cast<std::size_t>(vessel))};

  FleetSim sim(solo, solo_plan);
  const double cap = 2.0 * scenario.joust.timeout_factor * scenario.joust.circle_diameter /
                     std::max(scenario.joust.speed_range[0], 1e-3);
  while (!sim.all_arrived() && sim.time() < cap) sim.tick();
  return {sim.all_arrived() ? sim.arrival_time(0) : sim.time(), sim.distance(0)};
}

namespace {

struct PairTrack
{
  EncounterRecord record;
  bool seen = false;
};

void sample_pairs(const std::vector<VehicleState>& states, double t, double threshold, std::vector<PairTrack>& pairs)
{
  const std::size_t n = states.size();
  std::size_t idx = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b, ++idx) {
      const Eigen::Vector2d d = states[b].position() - states[a].position();
      const double range = d.norm();
      if (range >= threshold) continue;
      auto& pt = pairs[idx];
      const double to_b = std::atan2(d.y(), d.x());
      pt.record.relative_track.push_back({range, wrap_angle(to_b - states[a].theta), t});
      pt.record.reverse_track.push_back({range, wrap_angle(to_b + kPi - states[b].theta), t});
      pt.record.min_range = pt.seen ? std::min(pt.record.min_range, range) : range;
      pt.seen = true;
    }
  }
}

void append_turn(const Scenario& scenario, const FleetSim& sim, std::vector<TrajectoryRow>& rows)
{
  // Scripted 360 degree pivot turn at the goal; logged only, never scored.
  const double dt = scenario.joust.dt;
  for (std::size_t i = 0; i < sim.states().size(); ++i) {
    const auto& spec = scenario.vessels[i].spec;
    const VehicleState s = sim.states()[i];
    const Eigen::Vector2d pivot = s.position() - spec.gamma * Eigen::Vector2d(std::cos(s.theta), std::sin(s.theta));
    const double rate = spec.bounds.rud_max;
    const int steps = static_cast<int>(std::ceil(2.0 * kPi / (rate * dt)));
    for (int k = 1; k <= steps; ++k) {
      const double theta = s.theta + std::min(k * rate * dt, 2.0 * kPi);
      TrajectoryRow row;
      row.t = sim.time() + k * dt;
      row.vehicle_id = static_cast<int>(i);
      row.state = {pivot.x() + spec.gamma * std::cos(theta), pivot.y() + spec.gamma * std::sin(theta), wrap_angle(theta)};
      row.u_safe = row.u_nom = {0.0, rate};
      rows.push_back(row);
    }
  }
}

}  // namespace

LegResult run_leg(const Scenario& scenario, const LegPlan& plan, bool record_trajectory)
{
  const std::size_t n = scenario.vessels.size();
  LegResult result;
  result.leg_index = plan.leg_index;

  std::vector<std::pair<double, double>> baselines(n, {0.0, 0.0});
  double longest = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Policy p = scenario.vessels[i].policy;
    if (p != Policy::Autonomous && p != Policy::StraightLine) continue;
    baselines[i] = baseline_traversal(scenario, plan, static_cast<int>(i));
    longest = std::max(longest, baselines[i].first);
  }
  if (longest <= 0.0) longest = scenario.joust.circle_diameter / std::max(scenario.joust.speed_range[0], 1e-3);
  const double timeout = scenario.joust.timeout_factor * longest;

  std::vector<PairTrack> pairs(n * (n - 1) / 2);
  {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b, ++idx) {
        pairs[idx].record.vehicle_pair = {static_cast<int>(a), static_cast<int>(b)};
        pairs[idx].record.leg_index = plan.leg_index;
      }
    }
  }

  FleetSim sim(scenario, plan);
  sample_pairs(sim.states(), 0.0, scenario.joust.encounter_threshold, pairs);
  while (!sim.all_arrived() && sim.time() < timeout - 1e-9) {
    const std::vector<VehicleState> before = sim.states();
    const double t = sim.time();
    sim.tick();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& tk = sim.last_tick()[i];
      if (sim.arrived(static_cast<int>(i)) && sim.arrival_time(static_cast<int>(i)) < t + 1e-9) continue;
      result.filtered_ticks += tk.filtered ? 1 : 0;
      result.slacked_ticks += tk.slacked ? 1 : 0;
      if (record_trajectory) {
        result.trajectory.push_back({t, static_cast<int>(i), before[i], tk.u_nom, tk.u_safe, tk.slack_total, tk.min_h});
      }
    }
    sample_pairs(sim.states(), sim.time(), scenario.joust.encounter_threshold, pairs);
  }
  result.duration = sim.time();

  for (std::size_t i = 0; i < n; ++i) {
    const Policy p = scenario.vessels[i].policy;
    if (p != Policy::Autonomous && p != Policy::StraightLine) continue;
    LegStats st;
    st.leg_index = plan.leg_index;
    st.vehicle_id = static_cast<int>(i);
    st.timed_out = !sim.arrived(static_cast<int>(i));
    st.time = st.timed_out ? sim.time() : sim.arrival_time(static_cast<int>(i));
    st.distance = sim.distance(static_cast<int>(i));
    st.baseline_time = baselines[i].first;
    st.baseline_distance = baselines[i].second;
    result.timed_out = result.timed_out || st.timed_out;
    result.stats.push_back(st);
  }

  for (auto& pt : pairs) {
    if (!pt.seen) continue;
    const auto [a, b] = pt.record.vehicle_pair;
    for (int side = 0; side < 2; ++side) {
      const int v = side == 0 ? a : b;
      pt.record.leg_time[static_cast<std::size_t>(side)] =
          sim.arrived(v) ? sim.arrival_time(v) : sim.time();
      pt.record.leg_distance[static_cast<std::size_t>(side)] = sim.distance(v);
    }
    result.encounters.push_back(std::move(pt.record));
  }

  if (record_trajectory) append_turn(scenario, sim, result.trajectory);
  return result;
}

int default_workers()
{
  const int hw = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("BARRIER_FLEET_THREADS")) {
    const int requested = std::atoi(env);
    if (requested > 0) return std::min(requested, hw);
  }
  return hw;
}

CampaignResult run_campaign(const Scenario& scenario, const CampaignOptions& options)
{
  const int workers = options.workers > 0 ? options.workers : default_workers();
  const bool fixed_legs = scenario.joust.n_legs > 0;
  const int leg_cap = fixed_legs ? scenario.joust.n_legs : options.max_legs;

  CampaignResult out;
  std::size_t encounters = 0;
  int next = 0;
  bool done = false;
  while (!done && next < leg_cap) {
    const int batch = std::min(leg_cap - next, std::max(8, 2 * workers));
    std::vector<LegResult> results(static_cast<std::size_t>(batch));
    std::atomic<int> cursor{0};
    auto work = [&] {
      for (int k = cursor.fetch_add(1); k < batch; k = cursor.fetch_add(1)) {
        const int leg = next + k;
        results[static_cast<std::size_t>(k)] =
            run_leg(scenario, spawn_leg(scenario, leg), leg < options.trajectory_legs);
      }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < std::min(workers, batch); ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    // Merge in leg order; stop at the first leg that reaches the target so the
    // result does not depend on batch size or worker count.
    for (auto& r : results) {
      ++out.legs_run;
      out.timeouts += r.timed_out ? 1 : 0;
      out.filtered_ticks += r.filtered_ticks;
      out.slacked_ticks += r.slacked_ticks;
      encounters += r.encounters.size();
      for (auto& e : r.encounters) out.records.push_back(std::move(e));
      for (auto& s : r.stats) out.leg_stats.push_back(s);
      if (!r.trajectory.empty()) {
        r.encounters.clear();
        out.logged_legs.push_back(std::move(r));
      }
      if (!fixed_legs && encounters >= scenario.joust.target_encounters) {
        done = true;
        break;
      }
    }
    next += batch;
  }
  return out;
}

}  // namespace barrier_fleet
