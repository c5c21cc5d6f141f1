#pragma once

// 4-connected grid environment: edge costs, Dijkstra routing, traversal
// inflation and the area / subarea partition used for meetings.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rmipp/core.hpp"

namespace rmipp {

struct Edge {
  LocationId to = 0;
  double cost = 0.0;
};

class GridWorld {
 public:
  GridWorld() = default;

  GridWorld(int width, int height, double base_cost) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw ConfigError("grid dimensions must be >= 1 (got " + std::to_string(width) + "x" +
                        std::to_string(height) + ")");
    }
    if (!(base_cost > 0.0) || !std::isfinite(base_cost)) {
      throw ConfigError("grid base_cost must be positive");
    }
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    auto sites = std::make_shared<Sites>(n);
    out_.resize(n);
    in_.resize(n);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const auto id = to_id(x, y);
        (*sites)[id] = Point{static_cast<double>(x), static_cast<double>(y)};
        // Neighbors in ascending id order.
        if (y > 0) out_[id].push_back({to_id(x, y - 1), base_cost});
        if (x > 0) out_[id].push_back({to_id(x - 1, y), base_cost});
        if (x + 1 < width) out_[id].push_back({to_id(x + 1, y), base_cost});
        if (y + 1 < height) out_[id].push_back({to_id(x, y + 1), base_cost});
      }
    }
    for (LocationId u = 0; u < n; ++u) {
      for (const auto& e : out_[u]) in_[e.to].push_back(u);
    }
    sites_ = std::move(sites);
    areas_.push_back(all_locations());
    subareas_.push_back({areas_.front()});
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return out_.size(); }
  const Sites& sites() const { return *sites_; }
  const SitesPtr& sites_ptr() const { return sites_; }

  LocationId to_id(int x, int y) const {
    return static_cast<LocationId>(y) * static_cast<LocationId>(width_) +
           static_cast<LocationId>(x);
  }
  int x_of(LocationId id) const { return static_cast<int>(id % static_cast<LocationId>(width_)); }
  int y_of(LocationId id) const { return static_cast<int>(id / static_cast<LocationId>(width_)); }
  bool valid(LocationId id) const { return id < size(); }

  std::span<const Edge> out_edges(LocationId u) const { return out_[u]; }
  std::span<const LocationId> in_neighbors(LocationId v) const { return in_[v]; }

  std::size_t edge_count() const {
    std::size_t c = 0;
    for (const auto& es : out_) c += es.size();
    return c;
  }

  // Cost of the directed edge u -> v, or +inf if absent.
  double cost(LocationId u, LocationId v) const {
    for (const auto& e : out_[u]) {
      if (e.to == v) return e.cost;
    }
    return std::numeric_limits<double>::infinity();
  }

  bool has_edge(LocationId u, LocationId v) const { return std::isfinite(cost(u, v)); }

  void set_cost(LocationId u, LocationId v, double c) {
    if (!(c > 0.0)) throw ConfigError("edge cost must be positive");
    for (auto& e : out_[u]) {
      if (e.to == v) {
        e.cost = c;
        return;
      }
    }
    throw ConfigError("set_cost: no edge " + std::to_string(u) + "->" + std::to_string(v));
  }

  // Removes u -> v. Only used to build disconnected instances in tests.
  void remove_edge(LocationId u, LocationId v) {
    auto& es = out_[u];
    es.erase(std::remove_if(es.begin(), es.end(), [&](const Edge& e) { return e.to == v; }),
             es.end());
    auto& ins = in_[v];
    ins.erase(std::remove(ins.begin(), ins.end(), u), ins.end());
  }

  std::vector<LocationId> all_locations() const {
    std::vector<LocationId> out(size());
    for (LocationId i = 0; i < size(); ++i) out[i] = i;
    return out;
  }

  const std::vector<std::vector<LocationId>>& areas() const { return areas_; }
  const std::vector<std::vector<std::vector<LocationId>>>& subareas() const { return subareas_; }

  void set_partition(std::vector<std::vector<LocationId>> areas,
                     std::vector<std::vector<std::vector<LocationId>>> subareas) {
    areas_ = std::move(areas);
    subareas_ = std::move(subareas);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  SitesPtr sites_;
  std::vector<std::vector<Edge>> out_;
  std::vector<std::vector<LocationId>> in_;
  std::vector<std::vector<LocationId>> areas_;
  std::vector<std::vector<std::vector<LocationId>>> subareas_;
};

inline GridWorld build_grid(int width, int height, double base_cost = 1.0) {
  return GridWorld(width, height, base_cost);
}

namespace detail {

// Splits [0, extent) into `parts` bands of extent/parts, remainder to the last.
inline std::vector<std::pair<int, int>> bands(int extent, int parts) {
  std::vector<std::pair<int, int>> out;
  const int base = extent / parts;
  for (int i = 0; i < parts; ++i) {
    const int lo = i * base;
    const int hi = (i + 1 == parts) ? extent : lo + base;
    out.emplace_back(lo, hi);
  }
  return out;
}

}  // namespace detail

// m vertical bands (areas) along x; each split into f horizontal bands
// (subareas) along y.
inline GridWorld partition(GridWorld world, int m, int f) {
  if (m < 1 || f < 1) throw ConfigError("partition: m and f must be >= 1");
  if (m > world.width()) {
    throw ConfigError("partition: m=" + std::to_string(m) + " exceeds grid width " +
                      std::to_string(world.width()));
  }
  if (f > world.height()) {
    throw ConfigError("partition: f=" + std::to_string(f) + " exceeds grid height " +
                      std::to_string(world.height()));
  }
  std::vector<std::vector<LocationId>> areas;
  std::vector<std::vector<std::vector<LocationId>>> subareas;
  for (auto [x0, x1] : detail::bands(world.width(), m)) {
    std::vector<LocationId> area;
    std::vector<std::vector<LocationId>> subs;
    for (auto [y0, y1] : detail::bands(world.height(), f)) {
      std::vector<LocationId> sub;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) sub.push_back(world.to_id(x, y));
      }
      area.insert(area.end(), sub.begin(), sub.end());
      subs.push_back(std::move(sub));
    }
    std::sort(area.begin(), area.end());
    areas.push_back(std::move(area));
    subareas.push_back(std::move(subs));
  }
  world.set_partition(std::move(areas), std::move(subareas));
  return world;
}

struct Path {
  std::vector<LocationId> nodes;
  double cost = 0.0;

  bool empty() const { return nodes.empty(); }
};

// Sum of current edge costs along `nodes`; +inf if some hop is not an edge.
inline double path_cost(const GridWorld& world, std::span<const LocationId> nodes) {
  double c = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) c += world.cost(nodes[i - 1], nodes[i]);
  return c;
}

struct ShortestPathTree {
  LocationId root = 0;
  bool reverse = false;             // distances *to* root when true
  std::vector<double> dist;
  std::vector<LocationId> link;     // predecessor (forward) or successor (reverse)
};

inline constexpr LocationId kNoLink = std::numeric_limits<LocationId>::max();

namespace detail {

inline ShortestPathTree dijkstra(const GridWorld& world, LocationId root, bool reverse) {
  if (!world.valid(root)) throw ConfigError("shortest_path: invalid location id");
  const auto n = world.size();
  ShortestPathTree t{root, reverse,
                     std::vector<double>(n, std::numeric_limits<double>::infinity()),
                     std::vector<LocationId>(n, kNoLink)};
  using Item = std::pair<double, LocationId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  std::vector<char> done(n, 0);
  t.dist[root] = 0.0;
  pq.emplace(0.0, root);
  auto relax = [&](LocationId u, LocationId v, double c) {
    const double nd = t.dist[u] + c;
    if (nd < t.dist[v] || (nd == t.dist[v] && u < t.link[v])) {
      const bool improved = nd < t.dist[v];
      t.dist[v] = nd;
      t.link[v] = u;
      if (improved) pq.emplace(nd, v);
    }
  };
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (done[u]) continue;
    done[u] = 1;
    if (!reverse) {
      for (const auto& e : world.out_edges(u)) {
        if (!done[e.to]) relax(u, e.to, e.cost);
      }
    } else {
      for (auto w : world.in_neighbors(u)) {
        if (!done[w]) relax(u, w, world.cost(w, u));
      }
    }
  }
  return t;
}

}  // namespace detail

inline ShortestPathTree distances_from(const GridWorld& world, LocationId s) {
  return detail::dijkstra(world, s, false);
}

inline ShortestPathTree distances_to(const GridWorld& world, LocationId t) {
  return detail::dijkstra(world, t, true);
}

inline Path extract_path(const GridWorld& world, const ShortestPathTree& tree, LocationId other) {
  if (!world.valid(other)) throw ConfigError("shortest_path: invalid location id");
  if (!std::isfinite(tree.dist[other])) {
    throw InfeasibleError("shortest_path: location " + std::to_string(other) +
                          " is disconnected from " + std::to_string(tree.root));
  }
  Path p;
  for (LocationId v = other; v != kNoLink; v = tree.link[v]) p.nodes.push_back(v);
  if (!tree.reverse) std::reverse(p.nodes.begin(), p.nodes.end());
  p.cost = path_cost(world, p.nodes);
  return p;
}

// Minimum-cost route s -> t under the current edge costs. Equal-cost ties
// prefer the smaller predecessor id.
inline Path shortest_path(const GridWorld& world, LocationId s, LocationId t) {
  if (!world.valid(t)) throw ConfigError("shortest_path: invalid location id");
  return extract_path(world, distances_from(world, s), t);
}

// Joins s->q and q->t, dropping the repeated q.
inline Path concat(const GridWorld& world, const Path& a, const Path& b) {
  Path p = a;
  if (!b.nodes.empty()) {
    const auto skip = (!p.nodes.empty() && p.nodes.back() == b.nodes.front()) ? 1 : 0;
    p.nodes.insert(p.nodes.end(), b.nodes.begin() + skip, b.nodes.end());
  }
  p.cost = path_cost(world, p.nodes);
  return p;
}

// Multiplies the cost of every traversed edge, and of its reverse twin, by alpha.
inline void inflate_traversed(GridWorld& world, const Path& path, double alpha) {
  if (!(alpha > 1.0)) throw ConfigError("inflate_traversed: alpha must be > 1");
  std::vector<std::pair<LocationId, LocationId>> hops;
  for (std::size_t i = 1; i < path.nodes.size(); ++i) {
    const auto u = path.nodes[i - 1];
    const auto v = path.nodes[i];
    if (u == v) continue;
    hops.emplace_back(std::min(u, v), std::max(u, v));
  }
  // A corridor walked twice in one path is still inflated once.
  std::sort(hops.begin(), hops.end());
  hops.erase(std::unique(hops.begin(), hops.end()), hops.end());
  for (auto [u, v] : hops) {
    if (world.has_edge(u, v)) world.set_cost(u, v, world.cost(u, v) * alpha);
    if (world.has_edge(v, u)) world.set_cost(v, u, world.cost(v, u) * alpha);
  }
}

}  // namespace rmipp
