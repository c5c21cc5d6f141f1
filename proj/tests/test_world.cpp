#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <set>

#include "oracles.hpp"
#include "rmipp/world.hpp"

using namespace rmipp;

TEST(Grid, TwentyFiveSquareGridHas625Locations) { EXPECT_EQ(build_grid(25, 25).size(), 625u); }

TEST(Grid, SingleCellHasNoEdges) {
  const auto w = build_grid(1, 1);
  EXPECT_EQ(w.size(), 1u);
  EXPECT_EQ(w.edge_count(), 0u);
}

TEST(Grid, ThreeByThreeHas24DirectedEdges) { EXPECT_EQ(build_grid(3, 3).edge_count(), 24u); }

TEST(Grid, RejectsBadDimensions) {
  EXPECT_THROW(build_grid(0, 3), ConfigError);
  EXPECT_THROW(build_grid(3, 3, 0.0), ConfigError);
}

TEST(Partition, ThreeAreasUseVerticalBands) {
  const auto w = partition(build_grid(25, 25), 3, 10);
  ASSERT_EQ(w.areas().size(), 3u);
  // Columns: remainder goes to the last band.
  const std::vector<int> widths{8, 8, 9};
  int x0 = 0;
  for (std::size_t a = 0; a < 3; ++a) {
    EXPECT_EQ(w.areas()[a].size(), static_cast<std::size_t>(widths[a] * 25));
    std::set<int> cols;
    for (auto id : w.areas()[a]) cols.insert(w.x_of(id));
    EXPECT_EQ(*cols.begin(), x0);
    EXPECT_EQ(static_cast<int>(cols.size()), widths[a]);
    x0 += widths[a];
    ASSERT_EQ(w.subareas()[a].size(), 10u);
    std::size_t total = 0;
    for (const auto& sb : w.subareas()[a]) total += sb.size();
    EXPECT_EQ(total, w.areas()[a].size());
  }
}

TEST(Partition, SingleAreaIsWholeGrid) {
  const auto w = partition(build_grid(4, 5), 1, 1);
  ASSERT_EQ(w.areas().size(), 1u);
  EXPECT_EQ(w.areas()[0], w.all_locations());
  ASSERT_EQ(w.subareas()[0].size(), 1u);
  EXPECT_EQ(w.subareas()[0][0], w.all_locations());
}

TEST(Partition, EveryLocationInExactlyOneSubarea) {
  for (auto [wd, ht, m, f] : {std::tuple{25, 25, 3, 10}, {7, 5, 2, 3}, {9, 4, 4, 4}}) {
    const auto w = partition(build_grid(wd, ht), m, f);
    std::vector<int> seen(w.size(), 0);
    for (const auto& area : w.subareas()) {
      for (const auto& sb : area) {
        for (auto id : sb) ++seen[id];
      }
    }
    for (int c : seen) EXPECT_EQ(c, 1);
  }
}

TEST(Partition, RejectsTooManyAreas) {
  EXPECT_THROW(partition(build_grid(3, 3), 4, 1), ConfigError);
  EXPECT_THROW(partition(build_grid(3, 3), 0, 1), ConfigError);
}

TEST(ShortestPath, SameNodeIsEmptyWalk) {
  const auto w = build_grid(3, 3);
  const auto p = shortest_path(w, 4, 4);
  EXPECT_EQ(p.nodes, std::vector<LocationId>{4});
  EXPECT_EQ(p.cost, 0.0);
}

TEST(ShortestPath, CornerToCornerIsManhattan) {
  const auto w = build_grid(3, 3, 1.5);
  const auto p = shortest_path(w, 0, 8);
  EXPECT_DOUBLE_EQ(p.cost, 6.0);
  EXPECT_EQ(p.nodes.size(), 5u);
  EXPECT_DOUBLE_EQ(path_cost(w, p.nodes), p.cost);
}

TEST(ShortestPath, UniformCostsEqualManhattanEverywhere) {
  const auto w = build_grid(6, 4);
  for (LocationId s = 0; s < w.size(); s += 5) {
    for (LocationId t = 0; t < w.size(); ++t) {
      const double manhattan = std::abs(w.x_of(s) - w.x_of(t)) + std::abs(w.y_of(s) - w.y_of(t));
      EXPECT_DOUBLE_EQ(shortest_path(w, s, t).cost, manhattan);
    }
  }
}

TEST(ShortestPath, RoutesAroundInflatedEdge) {
  // 0-1-2 along the top row: the unique cheapest route from 0 to 2.
  auto w = build_grid(3, 3);
  EXPECT_DOUBLE_EQ(shortest_path(w, 0, 2).cost, 2.0);
  w.set_cost(1, 2, 10.0);
  const auto p = shortest_path(w, 0, 2);
  EXPECT_DOUBLE_EQ(p.cost, oracle::cheapest_simple_path(w, 0, 2));
  for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) {
    EXPECT_FALSE(p.nodes[i] == 1 && p.nodes[i + 1] == 2);
  }
}

TEST(ShortestPath, MatchesExhaustiveSearchOnRandomCosts) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> c(0.5, 4.0);
  for (int rep = 0; rep < 20; ++rep) {
    auto w = build_grid(3, 3);
    for (LocationId u = 0; u < 9; ++u) {
      for (const auto& e : std::vector<Edge>(w.out_edges(u).begin(), w.out_edges(u).end())) {
        w.set_cost(u, e.to, c(rng));
      }
    }
    for (LocationId s = 0; s < 9; ++s) {
      for (LocationId t = 0; t < 9; ++t) {
        EXPECT_NEAR(shortest_path(w, s, t).cost, oracle::cheapest_simple_path(w, s, t), 1e-12);
      }
    }
  }
}

TEST(ShortestPath, DisconnectedTargetThrows) {
  auto w = build_grid(2, 1);
  w.remove_edge(0, 1);
  EXPECT_THROW(shortest_path(w, 0, 1), InfeasibleError);
}

TEST(Inflate, EmptyPathLeavesWorldUnchanged) {
  auto w = build_grid(3, 3);
  inflate_traversed(w, Path{}, 2.0);
  for (LocationId u = 0; u < 9; ++u) {
    for (const auto& e : w.out_edges(u)) EXPECT_EQ(e.cost, 1.0);
  }
}

TEST(Inflate, TraversedEdgesAndTwinsDouble) {
  auto w = build_grid(3, 3);
  const Path p{{0, 1, 2}, 2.0};
  inflate_traversed(w, p, 2.0);
  std::set<std::pair<LocationId, LocationId>> hit{{0, 1}, {1, 0}, {1, 2}, {2, 1}};
  for (LocationId u = 0; u < 9; ++u) {
    for (const auto& e : w.out_edges(u)) {
      EXPECT_EQ(e.cost, hit.count({u, e.to}) ? 2.0 : 1.0) << u << "->" << e.to;
    }
  }
  inflate_traversed(w, p, 2.0);
  EXPECT_EQ(w.cost(0, 1), 4.0);
  EXPECT_EQ(w.cost(2, 1), 4.0);
}

TEST(Inflate, ShortestCostIsMonotone) {
  auto w = build_grid(5, 5);
  std::mt19937_64 rng(8);
  double prev = shortest_path(w, 0, 24).cost;
  for (int k = 0; k < 10; ++k) {
    const auto s = rng() % 25, t = rng() % 25;
    inflate_traversed(w, shortest_path(w, s, t), 2.0);
    const double now = shortest_path(w, 0, 24).cost;
    EXPECT_GE(now, prev);
    prev = now;
  }
}

TEST(Inflate, RejectsAlphaAtMostOne) {
  auto w = build_grid(2, 2);
  EXPECT_THROW(inflate_traversed(w, Path{{0, 1}, 1.0}, 1.0), ConfigError);
}
