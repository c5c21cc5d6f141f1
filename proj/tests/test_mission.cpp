#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "rmipp/mission.hpp"

using namespace rmipp;

namespace {

struct Setup {
  GridWorld world;
  CommField field;
  std::vector<MeetingChoice> meetings;
  EnvField env;
};

Setup make_setup(int w, int h, int m, int f, std::size_t n, std::uint64_t seed) {
  Setup s;
  s.world = partition(build_grid(w, h), m, f);
  s.field = synth_comm_field(s.world, CommModel{});
  Rng rng(seed);
  s.meetings = plan_meetings(s.world, s.field, n, {1, 1, 3, MonteCarloMethod{200}}, rng);
  s.env = sample_environment({1.5, 2.5}, s.world.sites(), seed);
  return s;
}

MissionConfig make_config(std::size_t n, const GridWorld& w) {
  MissionConfig cfg;
  cfg.n = n;
  for (std::size_t k = 0; k < n; ++k) {
    cfg.starts.push_back(w.to_id(0, static_cast<int>(k % static_cast<std::size_t>(w.height()))));
    cfg.goals.push_back(w.to_id(w.width() - 1, static_cast<int>(k % static_cast<std::size_t>(w.height()))));
  }
  cfg.prior = {2.0, 3.0};
  cfg.fit.starts = 3;
  return cfg;
}

}  // namespace

TEST(Corrupt, DegenerateBoundsAreIdentity) {
  Rng rng(1);
  EXPECT_EQ(corrupt(1.25, rng, {{}, 0.0, 0.0}), 1.25);
}

TEST(Corrupt, OffsetStaysInBounds) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double d = corrupt(10.0, rng, {{}, 1.0, 3.0}) - 10.0;
    EXPECT_GE(d, 1.0);
    EXPECT_LE(d, 3.0);
  }
}

TEST(Corrupt, MeanOffsetIsCentred) {
  Rng rng(3);
  double sum = 0;
  for (int i = 0; i < 10000; ++i) sum += corrupt(0.0, rng, {{}, -2.0, 2.0});
  EXPECT_NEAR(sum / 10000, 0.0, 0.07);
}

TEST(PlanRobot, FullyClaimedAreaFallsBackToDirectPath) {
  auto w = build_grid(4, 4);
  GpModel gp({1, 1}, w.sites_ptr());
  RobotState rb;
  rb.position = 0;
  const auto area = w.all_locations();
  const auto plan = plan_robot(rb, w, gp, area, 15, area, 2.0);
  EXPECT_EQ(plan.intermediate, kNoLink);
  EXPECT_DOUBLE_EQ(plan.path.cost, 6.0);
}

TEST(PlanRobot, FirstRobotTakesTheMostInformativeLocation) {
  auto w = build_grid(5, 5);
  const Kernel k{1.0, 1.5};
  GpModel gp(k, w.sites_ptr());
  RobotState rb;
  rb.position = 0;
  std::vector<LocationId> area;
  for (LocationId id = 0; id < w.size(); ++id) {
    if (w.x_of(id) < 3) area.push_back(id);
  }
  const auto plan = plan_robot(rb, w, gp, area, 2, {}, 2.0);
  double best = -1;
  LocationId arg = kNoLink;
  for (auto q : area) {
    const double v = oracle::mi_symmetric(k, w.sites(), {q}, gp.jitter());
    if (v > best + 1e-9) {
      best = v;
      arg = q;
    }
  }
  EXPECT_EQ(plan.intermediate, arg);
}

TEST(PlanRobot, OverBudgetDirectPathIsInfeasible) {
  auto w = build_grid(5, 5);
  GpModel gp({1, 1}, w.sites_ptr());
  RobotState rb;
  rb.position = 0;
  rb.remaining_budget = 3.0;
  const std::vector<LocationId> area{12};
  EXPECT_THROW(plan_robot(rb, w, gp, area, 24, area, 2.0), InfeasibleError);
}

TEST(SequentialPlan, SingleRobotMatchesPlanRobot) {
  auto w1 = build_grid(6, 6);
  auto w2 = w1;
  GpModel gp({1, 2}, w1.sites_ptr());
  std::vector<RobotState> team(1);
  team[0].position = 0;
  const auto area = w1.all_locations();
  const std::vector<LocationId> meet{35};
  const auto plan = sequential_plan(team, w1, {gp}, area, meet, 2.0, 40.0);
  RobotState rb;
  rb.position = 0;
  rb.remaining_budget = 40.0;
  const auto single = plan_robot(rb, w2, gp, area, 35, {}, 2.0);
  EXPECT_EQ(plan.paths[0].nodes, single.path.nodes);
  EXPECT_EQ(plan.intermediates[0], single.intermediate);
}

TEST(SequentialPlan, ThreeRobotsGetDistinctTargetsAndMeet) {
  auto w = partition(build_grid(12, 12), 2, 4);
  GpModel gp({1, 2}, w.sites_ptr());
  std::vector<RobotState> team(3);
  for (std::size_t k = 0; k < 3; ++k) team[k].position = w.to_id(0, 2 + 4 * static_cast<int>(k));
  const auto& sub = w.subareas()[0][1];
  const std::vector<LocationId> meet{sub[0], sub[1], sub[2]};
  const auto plan = sequential_plan(team, w, {gp, gp, gp}, w.areas()[0], meet, 2.0, 90.0);
  std::set<LocationId> qs(plan.intermediates.begin(), plan.intermediates.end());
  EXPECT_EQ(qs.size(), 3u);
  EXPECT_EQ(qs.count(kNoLink), 0u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(plan.paths[k].nodes.back(), meet[k]);
  EXPECT_LE(plan.total_cost(), 90.0);
}

TEST(SequentialPlan, BudgetHoldsOnRandomScenarios) {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 100; ++rep) {
    auto w = build_grid(6, 6);
    GpModel gp({1, 1.5}, w.sites_ptr());
    const std::size_t n = 1 + rng() % 3;
    std::vector<RobotState> team(n);
    std::vector<LocationId> meet(n);
    double direct = 0;
    for (std::size_t k = 0; k < n; ++k) {
      team[k].position = rng() % 36;
      meet[k] = rng() % 36;
      direct += shortest_path(w, team[k].position, meet[k]).cost;
    }
    // Every share must cover its own direct route even after earlier robots
    // inflated shared corridors (at most n - 1 doublings).
    double worst = 0;
    for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, shortest_path(w, team[k].position, meet[k]).cost);
    const double gamma = std::max(direct * 2.0, worst * static_cast<double>(n << n)) + 1.0;
    const std::vector<GpModel> gps(n, gp);
    const auto plan = sequential_plan(team, w, gps, w.all_locations(), meet, 2.0, gamma);
    EXPECT_LE(plan.total_cost(), gamma + 1e-9);
  }
}

TEST(Mission, NoAttackNoTrimmingGivesIdenticalKernels) {
  auto s = make_setup(12, 8, 2, 4, 3, 1);
  auto cfg = make_config(3, s.world);
  cfg.F = 0;
  cfg.mode = ConsensusMode::wmsr;
  cfg.eps = 1e-9;
  cfg.max_rounds = 2000;
  const auto res = execute_mission(cfg, s.world, s.env, s.field, s.meetings, {1, 2});
  for (std::size_t k = 1; k < 3; ++k) {
    EXPECT_NEAR(res.robots[k].fitted.signal, res.robots[0].fitted.signal, 1e-6);
    EXPECT_NEAR(res.robots[k].fitted.length, res.robots[0].fitted.length, 1e-6);
  }
}

TEST(Mission, PathsEndInTheChosenSubareaAndAtTheGoals) {
  auto s = make_setup(12, 8, 2, 4, 4, 2);
  auto cfg = make_config(4, s.world);
  cfg.attack = {{3}, -5, 5};
  const auto res = execute_mission(cfg, s.world, s.env, s.field, s.meetings, {1, 2});
  ASSERT_EQ(res.plans.size(), 2u);
  const auto& sub = s.world.subareas()[0][s.meetings[0].subarea];
  for (const auto& p : res.plans[0].paths) {
    EXPECT_TRUE(std::find(sub.begin(), sub.end(), p.nodes.back()) != sub.end());
  }
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(res.plans[1].paths[k].nodes.back(), cfg.goals[k]);
  for (const auto& p : res.plans) EXPECT_LE(p.total_cost(), p.gamma + 1e-9);
}

TEST(Mission, MeasurementFidelity) {
  auto s = make_setup(12, 8, 2, 4, 4, 3);
  auto cfg = make_config(4, s.world);
  cfg.attack = {{1}, 1.0, 3.0};
  const auto res = execute_mission(cfg, s.world, s.env, s.field, s.meetings, {1, 2});
  for (const auto& rb : res.robots) {
    for (const auto& m : rb.measurements) {
      const double d = m.value - s.env.values[m.location];
      if (rb.compromised) {
        EXPECT_GE(d, 1.0);
        EXPECT_LE(d, 3.0);
      } else {
        EXPECT_EQ(d, 0.0);
      }
    }
  }
}

TEST(Mission, WmsrKeepsWellBehavedInsideTheirHullLinearIsDragged) {
  auto s = make_setup(12, 8, 2, 4, 4, 4);
  auto cfg = make_config(4, s.world);
  cfg.F = 1;
  cfg.attack = {{2}, 4.0, 5.0};
  cfg.max_rounds = 500;
  cfg.mode = ConsensusMode::wmsr;
  const auto r = execute_mission(cfg, s.world, s.env, s.field, s.meetings, {7, 8});
  cfg.mode = ConsensusMode::linear;
  const auto l = execute_mission(cfg, s.world, s.env, s.field, s.meetings, {7, 8});
  const auto bad = r.robots[2].fitted;
  double dist_r = 0, dist_l = 0;
  for (std::size_t k : {0u, 1u, 3u}) {
    dist_r += std::abs(r.robots[k].fitted.signal - bad.signal);
    dist_l += std::abs(l.robots[k].fitted.signal - l.robots[2].fitted.signal);
  }
  EXPECT_LT(dist_l, dist_r);
}

TEST(Mission, SameSeedsSameResult) {
  auto s = make_setup(12, 8, 2, 4, 3, 5);
  auto cfg = make_config(3, s.world);
  cfg.attack = {{0}, -5, 5};
  const auto a = execute_mission(cfg, s.world, s.env, s.field, s.meetings, {3, 4});
  const auto b = execute_mission(cfg, s.world, s.env, s.field, s.meetings, {3, 4});
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(a.robots[k].fitted, b.robots[k].fitted);
    ASSERT_EQ(a.robots[k].measurements.size(), b.robots[k].measurements.size());
  }
}
