#pragma once

// Scenario files: a strict JSON schema describing one experiment.

#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rmipp/consensus.hpp"
#include "rmipp/gp.hpp"
#include "rmipp/resilience.hpp"
#include "rmipp/world.hpp"

namespace rmipp {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

enum class ModeSelection { wmsr, linear, both };

inline ModeSelection parse_mode_selection(std::string_view s) {
  if (s == "wmsr") return ModeSelection::wmsr;
  if (s == "linear") return ModeSelection::linear;
  if (s == "both") return ModeSelection::both;
  throw ConfigError("consensus.mode must be wmsr, linear or both (got '" + std::string(s) + "')");
}

inline std::string_view to_string(ModeSelection m) {
  switch (m) {
    case ModeSelection::wmsr:
      return "wmsr";
    case ModeSelection::linear:
      return "linear";
    case ModeSelection::both:
      return "both";
  }
  return "both";
}

struct Scenario {
  int width = 25;
  int height = 25;
  double base_cost = 1.0;
  int m_areas = 3;
  int f_subareas = 10;
  std::size_t n = 4;
  std::size_t n_a = 1;
  int F = 1;
  int r = 2;
  int s = 2;
  std::optional<double> gamma;
  double gamma_factor = 3.0;
  double alpha_inflation = 2.0;
  // Weights of the joint objective. Recorded only: the decoupled solver
  // optimizes meeting resilience and path information separately.
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  KernelBounds kernel_bounds;
  Range env_signal{1.0, 3.0};
  Range env_length{2.0, 4.0};
  std::optional<Kernel> prior_kernel;
  CommModel comm;
  Range epsilon{-5.0, 5.0};
  ModeSelection modes = ModeSelection::both;
  double eps = 1e-4;
  std::size_t max_rounds = 100;
  std::size_t placements = 10;
  std::size_t samples = 2000;
  bool exact_resilience = false;
  std::size_t retransmission_max_rounds = 100;
  std::size_t trials = 100;
  std::uint64_t master_seed = 1;
  std::size_t initial_evidence_count = 5;
  std::vector<LocationId> starts;  // defaulted when empty
  std::vector<LocationId> goals;
  std::size_t field_snapshots = 1;

  std::vector<std::string> warnings;

  bool outside_attack_model() const { return n_a > static_cast<std::size_t>(F); }

  Kernel prior() const {
    return prior_kernel.value_or(Kernel{0.5 * (env_signal.lo + env_signal.hi),
                                        0.5 * (env_length.lo + env_length.hi)});
  }
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where,
                           std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) {
      throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

inline const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError("missing required key '" + (where.empty() ? std::string(key) : where + "." + key) + "'");
  }
  return *it;
}

template <class T>
T get_as(const json& v, const std::string& name) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + name + "' has the wrong type");
  }
}

template <class T>
void optional_field(const json& obj, const char* key, const std::string& where, T& out) {
  if (auto it = obj.find(key); it != obj.end() && !it->is_null()) {
    out = get_as<T>(*it, where.empty() ? key : where + "." + key);
  }
}

inline Range get_range(const json& v, const std::string& name) {
  auto pair = get_as<std::vector<double>>(v, name);
  if (pair.size() != 2 || !(pair[0] <= pair[1])) {
    throw ConfigError("key '" + name + "' must be a [lo, hi] pair with lo <= hi");
  }
  return {pair[0], pair[1]};
}

}  // namespace detail

inline std::vector<LocationId> default_starts(const Scenario& sc) {
  std::vector<LocationId> out;
  for (std::size_t k = 0; k < sc.n; ++k) {
    const int y = static_cast<int>((static_cast<double>(k) + 0.5) * sc.height / static_cast<double>(sc.n));
    out.push_back(static_cast<LocationId>(std::min(y, sc.height - 1)) * static_cast<LocationId>(sc.width));
  }
  return out;
}

inline std::vector<LocationId> default_goals(const Scenario& sc) {
  std::vector<LocationId> out;
  const int first = std::max(0, sc.height / 2 - static_cast<int>(sc.n) / 2);
  for (std::size_t k = 0; k < sc.n; ++k) {
    const int y = std::min(first + static_cast<int>(k), sc.height - 1);
    out.push_back(static_cast<LocationId>(y) * static_cast<LocationId>(sc.width) +
                  static_cast<LocationId>(sc.width - 1));
  }
  return out;
}

// Cross-field checks; fills defaults and records warnings.
inline void validate(Scenario& sc) {
  sc.warnings.clear();
  if (sc.width < 1 || sc.height < 1) throw ConfigError("grid: width and height must be >= 1");
  if (!(sc.base_cost > 0.0)) throw ConfigError("grid.base_cost must be positive");
  if (sc.m_areas < 1 || sc.m_areas > sc.width) throw ConfigError("m_areas must lie in [1, grid.width]");
  if (sc.f_subareas < 1 || sc.f_subareas > sc.height) {
    throw ConfigError("f_subareas must lie in [1, grid.height]");
  }
  if (sc.n < 1 || sc.n > kDefaultRobustnessCap) {
    throw ConfigError("n must lie in [1, " + std::to_string(kDefaultRobustnessCap) + "]");
  }
  if (sc.n_a >= sc.n) throw ConfigError("n_a must be smaller than n (need a well-behaved robot)");
  if (sc.F < 0) throw ConfigError("F must be >= 0");
  if (sc.r < 1 || sc.s < 1 || static_cast<std::size_t>(sc.s) > sc.n) {
    throw ConfigError("r and s must be >= 1 with s <= n");
  }
  if (sc.gamma && !(*sc.gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(sc.gamma_factor >= 1.0)) throw ConfigError("gamma_factor must be >= 1");
  if (!(sc.alpha_inflation > 1.0)) throw ConfigError("alpha_inflation must be > 1");
  validate(sc.kernel_bounds);
  if (!(sc.env_signal.lo > 0.0) || !(sc.env_length.lo > 0.0)) {
    throw ConfigError("environment_kernel ranges must be positive");
  }
  validate(sc.prior());
  if (!(sc.eps > 0.0)) throw ConfigError("consensus.eps must be positive");
  if (sc.max_rounds < 1) throw ConfigError("consensus.max_rounds must be >= 1");
  if (sc.placements < 1) throw ConfigError("meeting.placements must be >= 1");
  if (sc.samples < 1) throw ConfigError("meeting.samples must be >= 1");
  if (sc.retransmission_max_rounds < 1) {
    throw ConfigError("meeting.retransmission_max_rounds must be >= 1");
  }
  if (sc.trials < 1) throw ConfigError("trials must be >= 1");
  const auto cells = static_cast<std::size_t>(sc.width) * static_cast<std::size_t>(sc.height);
  if (sc.initial_evidence_count > cells) {
    throw ConfigError("initial_evidence_count exceeds the number of locations");
  }
  if (sc.starts.empty()) sc.starts = default_starts(sc);
  if (sc.goals.empty()) sc.goals = default_goals(sc);
  if (sc.starts.size() != sc.n) throw ConfigError("starts must list one location per robot");
  if (sc.goals.size() != sc.n) throw ConfigError("goals must list one location per robot");
  for (auto id : sc.starts) {
    if (id >= cells) throw ConfigError("starts: location id out of range");
  }
  for (auto id : sc.goals) {
    if (id >= cells) throw ConfigError("goals: location id out of range");
  }
  if (sc.outside_attack_model()) {
    sc.warnings.push_back("outside attack model: n_a=" + std::to_string(sc.n_a) + " exceeds F=" +
                          std::to_string(sc.F));
  }
  if (sc.comm.kind == CommModelKind::distance_decay_interference && sc.comm.zones.empty() &&
      sc.comm.random_zones == 0) {
    sc.warnings.push_back("comm_field: interference model without zones");
  }
}

inline Scenario parse_scenario(const nlohmann::json& j) {
  using detail::get_as;
  using detail::optional_field;
  using detail::reject_unknown;
  using detail::require;
  reject_unknown(j, "",
                 {"grid", "m_areas", "f_subareas", "n", "n_a", "F", "r", "s", "gamma",
                  "gamma_factor", "alpha_inflation", "objective_weights", "kernel_bounds",
                  "environment_kernel", "prior_kernel", "comm_field", "attack", "consensus",
                  "meeting", "trials", "master_seed", "initial_evidence_count", "starts",
                  "goals", "field_snapshots", "description"});
  Scenario sc;

  const auto& grid = require(j, "grid", "");
  reject_unknown(grid, "grid", {"width", "height", "base_cost"});
  sc.width = get_as<int>(require(grid, "width", "grid"), "grid.width");
  sc.height = get_as<int>(require(grid, "height", "grid"), "grid.height");
  optional_field(grid, "base_cost", "grid", sc.base_cost);

  sc.m_areas = get_as<int>(require(j, "m_areas", ""), "m_areas");
  sc.f_subareas = get_as<int>(require(j, "f_subareas", ""), "f_subareas");
  sc.n = get_as<std::size_t>(require(j, "n", ""), "n");
  sc.n_a = get_as<std::size_t>(require(j, "n_a", ""), "n_a");
  sc.F = get_as<int>(require(j, "F", ""), "F");
  sc.r = get_as<int>(require(j, "r", ""), "r");
  sc.s = get_as<int>(require(j, "s", ""), "s");
  sc.trials = get_as<std::size_t>(require(j, "trials", ""), "trials");
  sc.master_seed = get_as<std::uint64_t>(require(j, "master_seed", ""), "master_seed");

  if (auto it = j.find("gamma"); it != j.end() && !it->is_null()) {
    sc.gamma = get_as<double>(*it, "gamma");
  }
  optional_field(j, "gamma_factor", "", sc.gamma_factor);
  optional_field(j, "alpha_inflation", "", sc.alpha_inflation);
  optional_field(j, "initial_evidence_count", "", sc.initial_evidence_count);
  optional_field(j, "starts", "", sc.starts);
  optional_field(j, "goals", "", sc.goals);
  optional_field(j, "field_snapshots", "", sc.field_snapshots);

  if (auto it = j.find("objective_weights"); it != j.end()) {
    reject_unknown(*it, "objective_weights", {"alpha1", "alpha2"});
    optional_field(*it, "alpha1", "objective_weights", sc.alpha1);
    optional_field(*it, "alpha2", "objective_weights", sc.alpha2);
  }
  if (auto it = j.find("kernel_bounds"); it != j.end()) {
    reject_unknown(*it, "kernel_bounds", {"signal", "length"});
    if (it->contains("signal")) {
      auto rg = detail::get_range((*it)["signal"], "kernel_bounds.signal");
      sc.kernel_bounds.signal_lo = rg.lo;
      sc.kernel_bounds.signal_hi = rg.hi;
    }
    if (it->contains("length")) {
      auto rg = detail::get_range((*it)["length"], "kernel_bounds.length");
      sc.kernel_bounds.length_lo = rg.lo;
      sc.kernel_bounds.length_hi = rg.hi;
    }
  }
  if (auto it = j.find("environment_kernel"); it != j.end()) {
    reject_unknown(*it, "environment_kernel", {"signal", "length"});
    if (it->contains("signal")) sc.env_signal = detail::get_range((*it)["signal"], "environment_kernel.signal");
    if (it->contains("length")) sc.env_length = detail::get_range((*it)["length"], "environment_kernel.length");
  }
  if (auto it = j.find("prior_kernel"); it != j.end() && !it->is_null()) {
    reject_unknown(*it, "prior_kernel", {"signal", "length"});
    sc.prior_kernel = Kernel{get_as<double>(require(*it, "signal", "prior_kernel"), "prior_kernel.signal"),
                             get_as<double>(require(*it, "length", "prior_kernel"), "prior_kernel.length")};
  }
  if (auto it = j.find("comm_field"); it != j.end()) {
    const auto& c = *it;
    reject_unknown(c, "comm_field", {"model", "range", "beta", "zones", "random_zones", "zone_size", "seed"});
    sc.comm.kind = parse_comm_model_kind(get_as<std::string>(require(c, "model", "comm_field"), "comm_field.model"));
    optional_field(c, "range", "comm_field", sc.comm.range);
    optional_field(c, "beta", "comm_field", sc.comm.beta);
    optional_field(c, "random_zones", "comm_field", sc.comm.random_zones);
    optional_field(c, "seed", "comm_field", sc.comm.seed);
    if (c.contains("zone_size")) {
      auto rg = detail::get_range(c["zone_size"], "comm_field.zone_size");
      sc.comm.zone_min = static_cast<int>(rg.lo);
      sc.comm.zone_max = static_cast<int>(rg.hi);
    }
    if (c.contains("zones")) {
      for (const auto& z : c["zones"]) {
        auto v = get_as<std::vector<int>>(z, "comm_field.zones");
        if (v.size() != 4 || v[0] > v[2] || v[1] > v[3]) {
          throw ConfigError("comm_field.zones entries must be [x0, y0, x1, y1] with x0<=x1, y0<=y1");
        }
        sc.comm.zones.push_back({v[0], v[1], v[2], v[3]});
      }
    }
  }
  if (auto it = j.find("attack"); it != j.end()) {
    reject_unknown(*it, "attack", {"epsilon"});
    if (it->contains("epsilon")) sc.epsilon = detail::get_range((*it)["epsilon"], "attack.epsilon");
  }
  if (auto it = j.find("consensus"); it != j.end()) {
    reject_unknown(*it, "consensus", {"mode", "eps", "max_rounds"});
    if (it->contains("mode")) {
      sc.modes = parse_mode_selection(get_as<std::string>((*it)["mode"], "consensus.mode"));
    }
    optional_field(*it, "eps", "consensus", sc.eps);
    optional_field(*it, "max_rounds", "consensus", sc.max_rounds);
  }
  if (auto it = j.find("meeting"); it != j.end()) {
    reject_unknown(*it, "meeting", {"placements", "samples", "method", "retransmission_max_rounds"});
    optional_field(*it, "placements", "meeting", sc.placements);
    optional_field(*it, "samples", "meeting", sc.samples);
    optional_field(*it, "retransmission_max_rounds", "meeting", sc.retransmission_max_rounds);
    if (it->contains("method")) {
      const auto m = get_as<std::string>((*it)["method"], "meeting.method");
      if (m == "exact") {
        sc.exact_resilience = true;
      } else if (m == "monte_carlo") {
        sc.exact_resilience = false;
      } else {
        throw ConfigError("meeting.method must be 'exact' or 'monte_carlo'");
      }
    }
  }
  validate(sc);
  return sc;
}

inline Scenario parse_scenario_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario_text(read_file(path)); }

// MIPP_SEED, when set, replaces master_seed.
inline void apply_env_overrides(Scenario& sc) {
  if (const char* v = std::getenv("MIPP_SEED"); v != nullptr && *v != '\0') {
    char* end = nullptr;
    const auto parsed = std::strtoull(v, &end, 10);
    if (end == nullptr || *end != '\0') throw ConfigError("MIPP_SEED must be an unsigned integer");
    sc.master_seed = parsed;
  }
}

inline ResilienceMethod resilience_method(const Scenario& sc) {
  if (sc.exact_resilience) return ExactMethod{};
  return MonteCarloMethod{sc.samples};
}

}  // namespace rmipp
