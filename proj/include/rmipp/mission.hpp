#pragma once

// Mission orchestration: sensor attacks, sequential greedy informative
// planning per area, traversal with sensing, and meeting-time consensus on
// kernel hyperparameters.

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rmipp/consensus.hpp"
#include "rmipp/core.hpp"
#include "rmipp/gp.hpp"
#include "rmipp/resilience.hpp"
#include "rmipp/world.hpp"

namespace rmipp {

struct AttackSpec {
  std::vector<std::size_t> compromised_ids;
  double lo = 0.0;
  double hi = 0.0;

  bool compromised(std::size_t id) const {
    return std::find(compromised_ids.begin(), compromised_ids.end(), id) !=
           compromised_ids.end();
  }
};

// measurement + eps, eps ~ U(lo, hi).
inline double corrupt(double measurement, Rng& rng, const AttackSpec& spec) {
  if (!(spec.lo <= spec.hi)) throw ConfigError("attack epsilon bounds must satisfy lo <= hi");
  if (spec.lo == spec.hi) return measurement + spec.lo;
  return measurement + std::uniform_real_distribution<double>(spec.lo, spec.hi)(rng);
}

struct RobotState {
  std::size_t id = 0;
  LocationId position = 0;
  std::vector<Measurement> measurements;  // own sensor readings, possibly corrupted
  Kernel fitted;
  bool compromised = false;
  double remaining_budget = std::numeric_limits<double>::infinity();
};

// Evidence a robot conditions on: shared initial knowledge overlaid with its
// own readings.
inline GpModel robot_model(const RobotState& robot, const Kernel& kernel, const SitesPtr& sites,
                           std::span<const Measurement> initial) {
  std::unordered_map<LocationId, double> ev;
  std::vector<LocationId> order;
  for (const auto& m : initial) {
    if (ev.emplace(m.location, m.value).second) order.push_back(m.location);
  }
  for (const auto& m : robot.measurements) {
    auto [it, fresh] = ev.insert_or_assign(m.location, m.value);
    if (fresh) order.push_back(m.location);
  }
  std::vector<double> values;
  values.reserve(order.size());
  for (auto id : order) values.push_back(ev.at(id));
  return GpModel(kernel, sites, std::move(order), std::move(values));
}

struct RobotPlan {
  Path path;
  LocationId intermediate = kNoLink;  // kNoLink for the direct fallback
};

// Picks the intermediate sensing location q of highest MI gain in `area`
// (excluding evidence and claimed locations) that fits the robot's budget,
// routes s -> q -> t, and inflates the traversed edges.
inline RobotPlan plan_robot(const RobotState& robot, GridWorld& world, const GpModel& gp,
                            std::span<const LocationId> area, LocationId meeting_pos,
                            std::span<const LocationId> claimed, double alpha) {
  if (!world.valid(robot.position) || !world.valid(meeting_pos)) {
    throw ConfigError("plan_robot: invalid start or meeting location");
  }
  std::vector<LocationId> placed(gp.sensed().begin(), gp.sensed().end());
  placed.insert(placed.end(), claimed.begin(), claimed.end());
  placed = detail::sorted_unique(placed);
  std::vector<LocationId> candidates;
  for (auto id : detail::sorted_unique(area)) {
    if (!std::binary_search(placed.begin(), placed.end(), id)) candidates.push_back(id);
  }

  const auto from_s = distances_from(world, robot.position);
  const auto to_t = distances_to(world, meeting_pos);
  const double budget = robot.remaining_budget;

  RobotPlan plan;
  if (!candidates.empty()) {
    const auto gains = mi_gains(gp, placed, candidates);
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });
    for (auto idx : order) {
      const auto q = candidates[idx];
      if (from_s.dist[q] + to_t.dist[q] <= budget) {
        plan.intermediate = q;
        plan.path = concat(world, extract_path(world, from_s, q), extract_path(world, to_t, q));
        break;
      }
    }
  }
  if (plan.intermediate == kNoLink) {
    plan.path = extract_path(world, from_s, meeting_pos);
    if (plan.path.cost > budget) {
      throw InfeasibleError("plan_robot: robot " + std::to_string(robot.id) +
                            " cannot reach its meeting location within budget (" +
                            std::to_string(plan.path.cost) + " > " + std::to_string(budget) + ")");
    }
  }
  inflate_traversed(world, plan.path, alpha);
  return plan;
}

struct MissionPlan {
  std::size_t area = 0;
  std::vector<Path> paths;
  std::vector<LocationId> intermediates;
  std::vector<LocationId> meeting_positions;
  std::optional<std::size_t> meeting_subarea;  // empty for the final area
  double gamma = 0.0;

  double total_cost() const {
    double c = 0.0;
    for (const auto& p : paths) c += p.cost;
    return c;
  }
};

// Robots plan in index order; each announced path joins `claimed` before the
// next robot plans. Every robot gets an equal gamma / n budget share.
inline MissionPlan sequential_plan(std::vector<RobotState>& team, GridWorld& world,
                                   const std::vector<GpModel>& gps,
                                   std::span<const LocationId> area,
                                   std::span<const LocationId> meeting, double alpha,
                                   double gamma) {
  const auto n = team.size();
  if (gps.size() != n || meeting.size() != n) {
    throw ConfigError("sequential_plan: team, models and meeting positions differ in size");
  }
  if (!(gamma > 0.0)) throw ConfigError("sequential_plan: gamma must be positive");
  MissionPlan plan;
  plan.gamma = gamma;
  plan.meeting_positions.assign(meeting.begin(), meeting.end());
  std::vector<LocationId> claimed;
  for (std::size_t k = 0; k < n; ++k) {
    team[k].remaining_budget = gamma / static_cast<double>(n);
    auto rp = plan_robot(team[k], world, gps[k], area, meeting[k], claimed, alpha);
    team[k].remaining_budget -= rp.path.cost;
    claimed.insert(claimed.end(), rp.path.nodes.begin(), rp.path.nodes.end());
    plan.intermediates.push_back(rp.intermediate);
    plan.paths.push_back(std::move(rp.path));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Offline meeting schedule

struct ResilienceParams {
  int r = 2;
  int s = 2;
  std::size_t placements = 10;
  ResilienceMethod method = MonteCarloMethod{2000};
};

// One meeting choice for every area except the last.
inline std::vector<MeetingChoice> plan_meetings(const GridWorld& world, const CommField& field,
                                                std::size_t n, const ResilienceParams& params,
                                                Rng& rng) {
  std::vector<MeetingChoice> out;
  const auto& subs = world.subareas();
  for (std::size_t a = 0; a + 1 < world.areas().size(); ++a) {
    out.push_back(select_meeting_subarea(subs[a], field, n, params.r, params.s,
                                         params.placements, params.method, rng));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Execution

struct MissionConfig {
  std::size_t n = 4;
  int F = 1;
  std::vector<LocationId> starts;
  std::vector<LocationId> goals;
  AttackSpec attack;
  ConsensusMode mode = ConsensusMode::wmsr;
  double eps = 1e-4;
  std::size_t max_rounds = 100;
  double alpha = 2.0;
  std::optional<double> gamma;  // per-round team budget; nullopt: gamma_factor x direct
  double gamma_factor = 3.0;
  Kernel prior;
  KernelBounds bounds;
  FitOptions fit;
  std::vector<Measurement> initial_evidence;
};

struct MissionSeeds {
  std::uint64_t attack = 0;
  std::uint64_t comm = 0;
};

struct MissionResult {
  std::vector<RobotState> robots;
  std::vector<GpModel> models;  // final kernel + own evidence per robot
  std::vector<RoundLog> logs;   // one per meeting, the final goal meeting included
  std::vector<MissionPlan> plans;
};

inline MissionResult execute_mission(const MissionConfig& cfg, const GridWorld& base_world,
                                     const EnvField& env, const CommField& field,
                                     const std::vector<MeetingChoice>& meetings,
                                     const MissionSeeds& seeds) {
  const auto n = cfg.n;
  const auto areas = base_world.areas().size();
  if (cfg.starts.size() != n || cfg.goals.size() != n) {
    throw ConfigError("execute_mission: need one start and one goal per robot");
  }
  if (meetings.size() + 1 != areas) {
    throw ConfigError("execute_mission: need one meeting per area except the last");
  }
  if (env.values.size() != base_world.size()) {
    throw ConfigError("execute_mission: environment does not match the grid");
  }

  GridWorld world = base_world;
  const auto& sites = world.sites_ptr();
  MissionResult out;
  out.robots.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& rb = out.robots[k];
    rb.id = k;
    rb.position = cfg.starts[k];
    rb.fitted = cfg.prior;
    rb.compromised = cfg.attack.compromised(k);
  }
  std::vector<std::set<LocationId>> visited(n);

  for (std::size_t a = 0; a < areas; ++a) {
    const bool last = a + 1 == areas;
    const std::vector<LocationId> targets = last ? cfg.goals : meetings[a].placement;

    std::vector<GpModel> gps;
    gps.reserve(n);
    for (const auto& rb : out.robots) {
      gps.push_back(robot_model(rb, rb.fitted, sites, cfg.initial_evidence));
    }
    double gamma = 0.0;
    if (cfg.gamma) {
      gamma = *cfg.gamma;
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        gamma += shortest_path(world, out.robots[k].position, targets[k]).cost;
      }
      gamma = std::max(gamma * cfg.gamma_factor, 1e-9);
    }
    auto plan = sequential_plan(out.robots, world, gps, world.areas()[a], targets, cfg.alpha, gamma);
    plan.area = a;
    if (!last) plan.meeting_subarea = meetings[a].subarea;

    // Traverse and sense every new node on the path.
    for (std::size_t k = 0; k < n; ++k) {
      auto& rb = out.robots[k];
      for (auto node : plan.paths[k].nodes) {
        if (!visited[k].insert(node).second) continue;
        double value = env.values[node];
        if (rb.compromised) {
          Rng draw(seed::derive(seeds.attack, k, node));
          value = corrupt(value, draw, cfg.attack);
        }
        rb.measurements.push_back({node, value});
      }
      rb.position = targets[k];
    }

    // Local fits, then consensus on (s_k, l_k).
    ConsensusState st;
    st.F = cfg.F;
    for (auto& rb : out.robots) {
      if (rb.measurements.size() >= 2) {
        Kernel init{std::clamp(rb.fitted.signal, cfg.bounds.signal_lo, cfg.bounds.signal_hi),
                    std::clamp(rb.fitted.length, cfg.bounds.length_lo, cfg.bounds.length_hi)};
        rb.fitted = fit_hyperparams(world.sites(), rb.measurements, init, cfg.bounds, cfg.fit).kernel;
      }
      st.values.push_back({rb.fitted.signal, rb.fitted.length});
      st.behaviors.push_back(rb.compromised ? Behavior::malicious_constant : Behavior::well_behaved);
    }
    const auto pg = build_prob_graph(field, targets);
    Rng comm_rng(seed::derive(seeds.comm, a));
    auto [after, log] = run_meeting_consensus(std::move(st), pg, cfg.mode, cfg.eps,
                                              cfg.max_rounds, comm_rng);
    for (std::size_t k = 0; k < n; ++k) {
      if (!out.robots[k].compromised) {
        out.robots[k].fitted = Kernel{after.values[k][0], after.values[k][1]};
      }
    }
    out.logs.push_back(std::move(log));
    out.plans.push_back(std::move(plan));
  }

  for (const auto& rb : out.robots) {
    out.models.push_back(robot_model(rb, rb.fitted, sites, cfg.initial_evidence));
  }
  return out;
}

}  // namespace rmipp
