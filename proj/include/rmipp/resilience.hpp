#pragma once

// Probabilistic communication graphs, their deterministic realizations,
// (r,s)-robustness certification and the probability of resilience P_r.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rmipp/core.hpp"
#include "rmipp/world.hpp"

namespace rmipp {

// ---------------------------------------------------------------------------
// Communication field

enum class CommModelKind { distance_decay, distance_decay_interference };

inline std::string_view to_string(CommModelKind k) {
  switch (k) {
    case CommModelKind::distance_decay:
      return "distance-decay";
    case CommModelKind::distance_decay_interference:
      return "distance-decay-with-interference-zones";
  }
  return "unknown";
}

inline CommModelKind parse_comm_model_kind(std::string_view id) {
  if (id == "distance-decay") return CommModelKind::distance_decay;
  if (id == "distance-decay-with-interference-zones") {
    return CommModelKind::distance_decay_interference;
  }
  throw ConfigError("comm_field.model: unknown model id '" + std::string(id) + "'");
}

// Inclusive cell rectangle.
struct Zone {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  friend bool operator==(const Zone&, const Zone&) = default;
};

struct CommModel {
  CommModelKind kind = CommModelKind::distance_decay;
  double range = 5.0;   // rho
  double beta = 0.3;    // attenuation inside interference zones
  std::vector<Zone> zones;
  int random_zones = 0;            // extra zones drawn from `seed`
  int zone_min = 3, zone_max = 8;  // side length range of random zones
  std::uint64_t seed = 0;
};

class CommField {
 public:
  CommField() = default;
  CommField(std::size_t n, std::vector<double> prob, CommModel generator,
            std::vector<Zone> realized_zones)
      : n_(n),
        prob_(std::move(prob)),
        generator_(std::move(generator)),
        zones_(std::move(realized_zones)) {}

  std::size_t size() const { return n_; }
  double at(LocationId i, LocationId j) const { return prob_[i * n_ + j]; }
  const CommModel& generator() const { return generator_; }
  // Explicit plus randomly drawn zones.
  const std::vector<Zone>& zones() const { return zones_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> prob_;
  CommModel generator_;
  std::vector<Zone> zones_;
};

// Synthetic stand-in for per-location communication models:
// p_ij = exp(-d^2 / (2 rho^2)), times beta when either endpoint lies in an
// interference zone.
inline CommField synth_comm_field(const GridWorld& world, const CommModel& model) {
  if (!(model.range > 0.0)) throw ConfigError("comm_field.range must be positive");
  std::vector<Zone> zones;
  if (model.kind == CommModelKind::distance_decay_interference) {
    if (!(model.beta >= 0.0 && model.beta < 1.0)) {
      throw ConfigError("comm_field.beta must lie in [0, 1)");
    }
    zones = model.zones;
    if (model.random_zones < 0) throw ConfigError("comm_field.random_zones must be >= 0");
    if (model.random_zones > 0) {
      if (model.zone_min < 1 || model.zone_max < model.zone_min) {
        throw ConfigError("comm_field zone size range is invalid");
      }
      Rng rng(model.seed);
      std::uniform_int_distribution<int> side(model.zone_min, model.zone_max);
      for (int z = 0; z < model.random_zones; ++z) {
        const int w = std::min(side(rng), world.width());
        const int h = std::min(side(rng), world.height());
        const int x0 = std::uniform_int_distribution<int>(0, world.width() - w)(rng);
        const int y0 = std::uniform_int_distribution<int>(0, world.height() - h)(rng);
        zones.push_back({x0, y0, x0 + w - 1, y0 + h - 1});
      }
    }
  } else if (!model.zones.empty() || model.random_zones > 0) {
    throw ConfigError("comm_field: zones require model 'distance-decay-with-interference-zones'");
  }

  const auto n = world.size();
  std::vector<char> jammed(n, 0);
  for (LocationId i = 0; i < n; ++i) {
    for (const auto& z : zones) {
      if (z.contains(world.x_of(i), world.y_of(i))) jammed[i] = 1;
    }
  }
  std::vector<double> prob(n * n);
  const double inv = 1.0 / (2.0 * model.range * model.range);
  const auto& sites = world.sites();
  for (LocationId i = 0; i < n; ++i) {
    for (LocationId j = 0; j < n; ++j) {
      if (i == j) {
        prob[i * n + j] = 1.0;
        continue;
      }
      double p = std::exp(-squared_distance(sites[i], sites[j]) * inv);
      if (jammed[i] || jammed[j]) p *= model.beta;
      prob[i * n + j] = p;
    }
  }
  return CommField(n, std::move(prob), model, std::move(zones));
}

// ---------------------------------------------------------------------------
// Graphs

inline constexpr std::size_t kMaxGraphNodes = 64;

// Directed graph on <= 64 nodes stored as in-neighbor bitmasks.
class DetGraph {
 public:
  DetGraph() = default;
  explicit DetGraph(std::size_t n) : n_(n), in_(n, 0) {
    if (n > kMaxGraphNodes) throw TooLargeError("DetGraph: more than 64 nodes");
  }

  std::size_t size() const { return n_; }
  std::uint64_t in_mask(std::size_t v) const { return in_[v]; }

  // u -> v: v hears u.
  bool has_edge(std::size_t u, std::size_t v) const { return (in_[v] >> u) & 1U; }
  void add_edge(std::size_t u, std::size_t v) {
    if (u != v) in_[v] |= (std::uint64_t{1} << u);
  }
  void remove_edge(std::size_t u, std::size_t v) { in_[v] &= ~(std::uint64_t{1} << u); }

  std::size_t edge_count() const {
    std::size_t c = 0;
    for (auto m : in_) c += static_cast<std::size_t>(std::popcount(m));
    return c;
  }

  void merge(const DetGraph& other) {
    for (std::size_t v = 0; v < n_; ++v) in_[v] |= other.in_[v];
  }

  static DetGraph complete(std::size_t n) {
    DetGraph g(n);
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = 0; v < n; ++v) g.add_edge(u, v);
    }
    return g;
  }

  friend bool operator==(const DetGraph&, const DetGraph&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> in_;
};

struct ProbGraph {
  std::size_t n = 0;
  std::vector<LocationId> positions;
  std::vector<double> edge_prob;  // row-major; (i, j) is the edge i -> j

  double p(std::size_t i, std::size_t j) const { return edge_prob[i * n + j]; }
  double& p(std::size_t i, std::size_t j) { return edge_prob[i * n + j]; }
};

inline ProbGraph make_prob_graph(std::size_t n, double p_all) {
  ProbGraph pg{n, std::vector<LocationId>(n, 0), std::vector<double>(n * n, p_all)};
  for (std::size_t i = 0; i < n; ++i) pg.p(i, i) = 1.0;
  return pg;
}

inline ProbGraph build_prob_graph(const CommField& field, std::span<const LocationId> positions) {
  const auto n = positions.size();
  if (n > kMaxGraphNodes) throw TooLargeError("build_prob_graph: more than 64 robots");
  ProbGraph pg{n, {positions.begin(), positions.end()}, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (positions[i] >= field.size()) throw ConfigError("build_prob_graph: invalid position");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      pg.p(i, j) = (i == j) ? 1.0 : field.at(positions[i], positions[j]);
    }
  }
  return pg;
}

// Each directed edge present independently with its probability. One uniform
// draw per ordered pair, row-major, so equal seeds couple realizations.
inline DetGraph sample_realization(const ProbGraph& pg, Rng& rng) {
  DetGraph g(pg.n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < pg.n; ++i) {
    for (std::size_t j = 0; j < pg.n; ++j) {
      if (i == j) continue;
      if (unif(rng) < pg.p(i, j)) g.add_edge(i, j);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// (r,s)-robustness

inline constexpr std::size_t kDefaultRobustnessCap = 10;

// Exact check over every pair of nonempty disjoint subsets S1, S2. With
// X_S = {i in S : i has >= r in-neighbors outside S}, the graph fails iff
// some pair has |X_S1| < |S1|, |X_S2| < |S2| and |X_S1| + |X_S2| < s.
// Runs in O(2^n n) by precomputing, for every T, the least |X_S| over
// deficient S within T.
inline bool is_rs_robust(const DetGraph& g, int r, int s,
                         std::size_t cap = kDefaultRobustnessCap) {
  const auto n = g.size();
  if (r < 1 || s < 1 || static_cast<std::size_t>(s) > std::max<std::size_t>(n, 1)) {
    throw ConfigError("is_rs_robust: need 1 <= r and 1 <= s <= n");
  }
  if (n > cap || n > 20) {
    throw TooLargeError("is_rs_robust: " + std::to_string(n) +
                        " nodes exceeds the exact-check cap of " + std::to_string(cap));
  }
  if (n < 2) return true;

  const std::uint32_t full = (std::uint32_t{1} << n) - 1;
  thread_local std::vector<std::uint8_t> reach;   // |X_S|
  thread_local std::vector<std::uint8_t> least;   // min |X_S'| over deficient S' within S
  reach.assign(std::size_t{full} + 1, 0);
  least.assign(std::size_t{full} + 1, 0);
  constexpr std::uint8_t kNone = std::numeric_limits<std::uint8_t>::max();

  for (std::uint32_t set = 1; set <= full; ++set) {
    std::uint8_t x = 0;
    const std::uint64_t outside = ~std::uint64_t{set};
    for (std::uint32_t rest = set; rest != 0; rest &= rest - 1) {
      const auto i = static_cast<std::size_t>(std::countr_zero(rest));
      if (std::popcount(g.in_mask(i) & outside) >= r) ++x;
    }
    reach[set] = x;
  }
  least[0] = kNone;
  for (std::uint32_t set = 1; set <= full; ++set) {
    std::uint8_t best =
        reach[set] < std::popcount(set) ? reach[set] : kNone;
    for (std::uint32_t rest = set; rest != 0; rest &= rest - 1) {
      const std::uint32_t bit = rest & (~rest + 1);
      best = std::min(best, least[set ^ bit]);
    }
    least[set] = best;
  }
  for (std::uint32_t s1 = 1; s1 < full; ++s1) {
    if (reach[s1] >= std::popcount(s1)) continue;
    const std::uint8_t other = least[full ^ s1];
    if (other != kNone && reach[s1] + other < s) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Probability of resilience

struct ExactMethod {
  std::size_t max_uncertain_edges = 20;
};

struct MonteCarloMethod {
  std::size_t samples = 2000;
};

using ResilienceMethod = std::variant<ExactMethod, MonteCarloMethod>;

struct ResilienceEstimate {
  double probability = 0.0;
  double std_error = 0.0;  // zero for exact
  std::size_t evaluations = 0;
  bool exact = false;
};

// Exact enumeration over every realization of the uncertain (0 < p < 1) edges.
inline ResilienceEstimate prob_resilience_exact(const ProbGraph& pg, int r, int s,
                                                ExactMethod m = {}) {
  DetGraph base(pg.n);
  std::vector<std::pair<std::size_t, std::size_t>> uncertain;
  for (std::size_t i = 0; i < pg.n; ++i) {
    for (std::size_t j = 0; j < pg.n; ++j) {
      if (i == j) continue;
      const double p = pg.p(i, j);
      if (p >= 1.0) {
        base.add_edge(i, j);
      } else if (p > 0.0) {
        uncertain.emplace_back(i, j);
      }
    }
  }
  if (uncertain.size() > m.max_uncertain_edges || uncertain.size() >= 63) {
    throw TooLargeError("prob_resilience: " + std::to_string(uncertain.size()) +
                        " uncertain edges exceed the exact cap of " +
                        std::to_string(m.max_uncertain_edges));
  }
  const std::uint64_t count = std::uint64_t{1} << uncertain.size();
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    DetGraph g = base;
    double w = 1.0;
    for (std::size_t e = 0; e < uncertain.size(); ++e) {
      const auto [i, j] = uncertain[e];
      if ((mask >> e) & 1U) {
        g.add_edge(i, j);
        w *= pg.p(i, j);
      } else {
        w *= 1.0 - pg.p(i, j);
      }
    }
    if (is_rs_robust(g, r, s)) total += w;
  }
  return {std::clamp(total, 0.0, 1.0), 0.0, static_cast<std::size_t>(count), true};
}

inline ResilienceEstimate prob_resilience_mc(const ProbGraph& pg, int r, int s,
                                             MonteCarloMethod m, Rng& rng) {
  if (m.samples < 1) throw ConfigError("prob_resilience: samples must be >= 1");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < m.samples; ++k) {
    if (is_rs_robust(sample_realization(pg, rng), r, s)) ++hits;
  }
  const double n = static_cast<double>(m.samples);
  const double p = static_cast<double>(hits) / n;
  return {p, std::sqrt(p * (1.0 - p) / n), m.samples, false};
}

inline ResilienceEstimate prob_resilience(const ProbGraph& pg, int r, int s,
                                          const ResilienceMethod& method, Rng& rng) {
  if (const auto* ex = std::get_if<ExactMethod>(&method)) {
    return prob_resilience_exact(pg, r, s, *ex);
  }
  return prob_resilience_mc(pg, r, s, std::get<MonteCarloMethod>(method), rng);
}

// ---------------------------------------------------------------------------
// Meeting-subarea selection

// n distinct locations drawn uniformly from `region`.
inline std::vector<LocationId> random_placement(std::span<const LocationId> region,
                                                std::size_t n, Rng& rng) {
  if (region.size() < n) throw InfeasibleError("random_placement: region smaller than team");
  std::vector<LocationId> pool(region.begin(), region.end());
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(n);
  return pool;
}

struct SubareaEvaluation {
  double mean_p_r = 0.0;
  std::vector<std::vector<LocationId>> placements;
  std::vector<double> p_r;  // per placement
  std::size_t best = 0;     // placement with highest P_r (first on ties)
};

inline SubareaEvaluation evaluate_subarea(std::span<const LocationId> subarea,
                                          const CommField& field, std::size_t n, int r, int s,
                                          std::size_t placements,
                                          const ResilienceMethod& method, Rng& rng) {
  if (placements < 1) throw ConfigError("placements must be >= 1");
  SubareaEvaluation ev;
  double sum = 0.0;
  for (std::size_t k = 0; k < placements; ++k) {
    auto pos = random_placement(subarea, n, rng);
    const auto pg = build_prob_graph(field, pos);
    double p = 0.0;
    try {
      p = prob_resilience(pg, r, s, method, rng).probability;
    } catch (const TooLargeError&) {
      p = prob_resilience_mc(pg, r, s, MonteCarloMethod{}, rng).probability;
    }
    sum += p;
    if (ev.p_r.empty() || p > ev.p_r[ev.best]) ev.best = ev.p_r.size();
    ev.p_r.push_back(p);
    ev.placements.push_back(std::move(pos));
  }
  ev.mean_p_r = sum / static_cast<double>(placements);
  return ev;
}

struct MeetingChoice {
  std::size_t subarea = 0;
  double p_r = 0.0;
  std::vector<LocationId> placement;  // best sampled placement in the chosen subarea
  std::vector<double> subarea_p_r;    // NaN for skipped subareas
  SubareaEvaluation evaluation;       // of the chosen subarea
};

// Highest mean-P_r subarea over random team placements (ties: lowest index).
// Subareas with fewer than n locations are skipped.
inline MeetingChoice select_meeting_subarea(
    const std::vector<std::vector<LocationId>>& subareas, const CommField& field,
    std::size_t n, int r, int s, std::size_t placements, const ResilienceMethod& method,
    Rng& rng) {
  MeetingChoice out;
  bool found = false;
  for (std::size_t j = 0; j < subareas.size(); ++j) {
    if (subareas[j].size() < n) {
      out.subarea_p_r.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    auto ev = evaluate_subarea(subareas[j], field, n, r, s, placements, method, rng);
    out.subarea_p_r.push_back(ev.mean_p_r);
    if (!found || ev.mean_p_r > out.p_r) {
      found = true;
      out.subarea = j;
      out.p_r = ev.mean_p_r;
      out.placement = ev.placements[ev.best];
      out.evaluation = std::move(ev);
    }
  }
  if (!found) throw InfeasibleError("select_meeting_subarea: every subarea is smaller than the team");
  return out;
}

}  // namespace rmipp
