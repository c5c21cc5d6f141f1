#pragma once

// Linear and W-MSR consensus updates, the multi-round meeting protocol over a
// probabilistic graph, and retransmission counting.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rmipp/core.hpp"
#include "rmipp/resilience.hpp"

namespace rmipp {

enum class ConsensusMode { linear, wmsr };

inline std::string_view to_string(ConsensusMode m) {
  return m == ConsensusMode::linear ? "linear" : "wmsr";
}

inline ConsensusMode parse_consensus_mode(std::string_view s) {
  if (s == "linear") return ConsensusMode::linear;
  if (s == "wmsr") return ConsensusMode::wmsr;
  throw ConfigError("consensus mode must be 'linear' or 'wmsr' (got '" + std::string(s) + "')");
}

enum class Behavior { well_behaved, malicious_constant };

// weights[0] is the robot's own weight, weights[k + 1] that of neighbor k.
inline double linear_step(double own, std::span<const double> neighbor_values,
                          std::span<const double> weights) {
  if (weights.size() != neighbor_values.size() + 1) {
    throw ConfigError("linear_step: need one weight per neighbor plus the own weight");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("linear_step: weights must be strictly positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("linear_step: weights must sum to 1");
  double x = weights[0] * own;
  for (std::size_t k = 0; k < neighbor_values.size(); ++k) x += weights[k + 1] * neighbor_values[k];
  // Clamp rounding drift back into the input hull.
  double lo = own, hi = own;
  for (double v : neighbor_values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return std::clamp(x, lo, hi);
}

inline double equal_weight_average(double own, std::span<const double> neighbor_values) {
  const std::vector<double> w(neighbor_values.size() + 1,
                              1.0 / static_cast<double>(neighbor_values.size() + 1));
  return linear_step(own, neighbor_values, w);
}

// Drops up to F neighbor values strictly above own (the largest ones) and up
// to F strictly below (the smallest), then averages own with the survivors.
inline double wmsr_step(double own, std::span<const double> neighbor_values, int F) {
  if (F < 0) throw ConfigError("wmsr_step: F must be >= 0");
  std::vector<double> above, below, kept;
  for (double v : neighbor_values) {
    if (v > own) {
      above.push_back(v);
    } else if (v < own) {
      below.push_back(v);
    } else {
      kept.push_back(v);
    }
  }
  const auto f = static_cast<std::size_t>(F);
  std::sort(above.begin(), above.end());
  std::sort(below.begin(), below.end());
  if (above.size() > f) kept.insert(kept.end(), above.begin(), above.end() - static_cast<std::ptrdiff_t>(f));
  if (below.size() > f) kept.insert(kept.end(), below.begin() + static_cast<std::ptrdiff_t>(f), below.end());
  std::sort(kept.begin(), kept.end());
  return equal_weight_average(own, kept);
}

struct ConsensusState {
  std::vector<std::vector<double>> values;  // per robot, per component
  std::vector<Behavior> behaviors;
  int F = 0;

  std::size_t size() const { return values.size(); }
};

struct RoundLog {
  std::size_t rounds = 0;
  std::vector<DetGraph> realized;
  bool converged = false;
  double final_spread = 0.0;
};

// max - min over well-behaved robots, maximized over components.
inline double well_behaved_spread(const ConsensusState& st) {
  double spread = 0.0;
  if (st.values.empty()) return spread;
  const auto dims = st.values.front().size();
  for (std::size_t c = 0; c < dims; ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < st.size(); ++i) {
      if (st.behaviors[i] != Behavior::well_behaved) continue;
      lo = std::min(lo, st.values[i][c]);
      hi = std::max(hi, st.values[i][c]);
    }
    if (hi >= lo) spread = std::max(spread, hi - lo);
  }
  return spread;
}

// Largest |value| over well-behaved robots, the scale for relative spread.
inline double well_behaved_scale(const ConsensusState& st) {
  double m = 0.0;
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (st.behaviors[i] != Behavior::well_behaved) continue;
    for (double v : st.values[i]) m = std::max(m, std::abs(v));
  }
  return m;
}

// One synchronous update on a fixed realization; malicious robots hold.
inline void consensus_round(ConsensusState& st, const DetGraph& g, ConsensusMode mode) {
  const auto n = st.size();
  auto next = st.values;
  std::vector<double> nbr;
  for (std::size_t i = 0; i < n; ++i) {
    if (st.behaviors[i] != Behavior::well_behaved) continue;
    for (std::size_t c = 0; c < st.values[i].size(); ++c) {
      nbr.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && g.has_edge(j, i)) nbr.push_back(st.values[j][c]);
      }
      next[i][c] = mode == ConsensusMode::wmsr ? wmsr_step(st.values[i][c], nbr, st.F)
                                               : equal_weight_average(st.values[i][c], nbr);
    }
  }
  st.values = std::move(next);
}

// Largest per-component move of a well-behaved robot between two states.
inline double well_behaved_change(const ConsensusState& before, const ConsensusState& after) {
  double m = 0.0;
  for (std::size_t i = 0; i < after.size(); ++i) {
    if (after.behaviors[i] != Behavior::well_behaved) continue;
    for (std::size_t c = 0; c < after.values[i].size(); ++c) {
      m = std::max(m, std::abs(after.values[i][c] - before.values[i][c]));
    }
  }
  return m;
}

// Rounds of sampled realizations + updates until the well-behaved robots
// agree and have stopped moving: both the spread and the last round's change
// below eps * max(1, scale). Agreement alone is not enough, because a
// constant attacker keeps pulling an agreeing linear team after it agrees.
inline std::pair<ConsensusState, RoundLog> run_meeting_consensus(
    ConsensusState state, const ProbGraph& pg, ConsensusMode mode, double eps,
    std::size_t max_rounds, Rng& rng) {
  if (!(eps > 0.0)) throw ConfigError("consensus eps must be positive");
  if (max_rounds < 1) throw ConfigError("consensus max_rounds must be >= 1");
  if (state.size() != pg.n || state.behaviors.size() != pg.n) {
    throw ConfigError("run_meeting_consensus: state and graph sizes differ");
  }
  RoundLog log;
  for (std::size_t round = 0; round < max_rounds; ++round) {
    DetGraph g = sample_realization(pg, rng);
    const ConsensusState before = state;
    consensus_round(state, g, mode);
    log.realized.push_back(std::move(g));
    log.rounds = round + 1;
    log.final_spread = well_behaved_spread(state);
    const double tol = eps * std::max(1.0, well_behaved_scale(state));
    if (log.final_spread < tol && well_behaved_change(before, state) < tol) {
      log.converged = true;
      break;
    }
  }
  return {std::move(state), std::move(log)};
}

// First round at which the union of realizations so far is (r,s)-robust;
// max_rounds if that never happens.
inline std::size_t count_retransmissions(const ProbGraph& pg, int r, int s,
                                         std::size_t max_rounds, Rng& rng) {
  if (max_rounds < 1) throw ConfigError("count_retransmissions: max_rounds must be >= 1");
  DetGraph acc(pg.n);
  for (std::size_t round = 1; round <= max_rounds; ++round) {
    acc.merge(sample_realization(pg, rng));
    if (is_rs_robust(acc, r, s)) return round;
  }
  return max_rounds;
}

}  // namespace rmipp
