#pragma once

// Seeded Monte Carlo experiment runner: paired resilient / non-resilient
// missions per trial, meeting-quality statistics, aggregation and output.

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "rmipp/consensus.hpp"
#include "rmipp/gp.hpp"
#include "rmipp/mission.hpp"
#include "rmipp/resilience.hpp"
#include "rmipp/scenario.hpp"
#include "rmipp/world.hpp"

namespace rmipp {

// Immutable per-experiment state shared by all trials.
struct ExperimentContext {
  Scenario scenario;
  GridWorld world;  // partitioned, base costs
  CommField field;

  static ExperimentContext make(Scenario sc) {
    validate(sc);
    auto world = partition(build_grid(sc.width, sc.height, sc.base_cost), sc.m_areas, sc.f_subareas);
    auto field = synth_comm_field(world, sc.comm);
    return {std::move(sc), std::move(world), std::move(field)};
  }
};

struct LearningErrors {
  double err_sk = 0.0;
  double err_lk = 0.0;
  double err_y = 0.0;
  double consensus_rounds = 0.0;  // mean over meetings
  bool converged = true;          // every meeting converged

  friend bool operator==(const LearningErrors&, const LearningErrors&) = default;
};

struct TrialMetrics {
  std::size_t trial = 0;
  bool valid = true;
  std::string diagnostic;
  double true_sk = 0.0;
  double true_lk = 0.0;
  std::optional<LearningErrors> resilient;      // W-MSR
  std::optional<LearningErrors> non_resilient;  // linear
  double p_r_star = 0.0;
  double p_r_rand = 0.0;
  double rounds_star = 0.0;
  double rounds_rand = 0.0;

  friend bool operator==(const TrialMetrics&, const TrialMetrics&) = default;
};

struct FieldSnapshot {
  std::size_t trial = 0;
  std::vector<double> truth;
  std::vector<double> initial;  // prior kernel + shared initial evidence
  std::vector<double> wmsr;     // first well-behaved robot
  std::vector<double> linear;
};

struct TrialResult {
  TrialMetrics metrics;
  std::vector<MeetingChoice> meetings;
  std::vector<std::size_t> compromised;
  std::optional<MissionResult> wmsr;
  std::optional<MissionResult> linear;
  std::optional<FieldSnapshot> fields;
};

inline LearningErrors learning_errors(const MissionResult& m, const EnvField& env) {
  LearningErrors e;
  std::size_t good = 0;
  const auto ids = detail::all_ids(env.values.size());
  for (std::size_t k = 0; k < m.robots.size(); ++k) {
    if (m.robots[k].compromised) continue;
    ++good;
    e.err_sk += std::abs(m.robots[k].fitted.signal - env.generator_kernel.signal);
    e.err_lk += std::abs(m.robots[k].fitted.length - env.generator_kernel.length);
    const auto post = posterior(m.models[k], ids);
    double err = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      err += std::abs(post.mean(static_cast<Eigen::Index>(i)) - env.values[i]);
    }
    e.err_y += err / static_cast<double>(ids.size());
  }
  if (good > 0) {
    e.err_sk /= static_cast<double>(good);
    e.err_lk /= static_cast<double>(good);
    e.err_y /= static_cast<double>(good);
  }
  for (const auto& log : m.logs) {
    e.consensus_rounds += static_cast<double>(log.rounds);
    e.converged = e.converged && log.converged;
  }
  if (!m.logs.empty()) e.consensus_rounds /= static_cast<double>(m.logs.size());
  return e;
}

inline std::vector<double> posterior_grid(const GpModel& gp) {
  const auto ids = detail::all_ids(gp.location_count());
  const auto post = posterior(gp, ids);
  return {post.mean.data(), post.mean.data() + post.mean.size()};
}

// One paired trial, fully determined by (scenario, index).
inline TrialResult run_trial(const ExperimentContext& ctx, std::size_t index,
                             bool capture_fields = false) {
  const auto& sc = ctx.scenario;
  const auto& world = ctx.world;
  const std::uint64_t trial_seed = seed::derive(sc.master_seed, index);
  TrialResult out;
  auto& tm = out.metrics;
  tm.trial = index;

  // Ground truth.
  Rng env_rng(seed::derive(trial_seed, seed::Stream::environment));
  const Kernel truth{std::uniform_real_distribution<double>(sc.env_signal.lo, std::nextafter(sc.env_signal.hi, 1e300))(env_rng),
                     std::uniform_real_distribution<double>(sc.env_length.lo, std::nextafter(sc.env_length.hi, 1e300))(env_rng)};
  tm.true_sk = truth.signal;
  tm.true_lk = truth.length;

  try {
    const EnvField env = sample_environment(truth, world.sites(), seed::derive(trial_seed, seed::Stream::environment, 1));

    // Shared initial knowledge and the compromised set.
    Rng ev_rng(seed::derive(trial_seed, seed::Stream::evidence));
    std::vector<Measurement> initial;
    for (auto id : random_placement(world.all_locations(), sc.initial_evidence_count, ev_rng)) {
      initial.push_back({id, env.values[id]});
    }
    std::vector<std::size_t> robots(sc.n);
    for (std::size_t k = 0; k < sc.n; ++k) robots[k] = k;
    Rng cmp_rng(seed::derive(trial_seed, seed::Stream::compromised));
    std::vector<LocationId> pick = random_placement(robots, sc.n_a, cmp_rng);
    out.compromised.assign(pick.begin(), pick.end());
    std::sort(out.compromised.begin(), out.compromised.end());

    // Offline meeting selection and the random-subarea baseline.
    const ResilienceParams rp{sc.r, sc.s, sc.placements, resilience_method(sc)};
    Rng place_rng(seed::derive(trial_seed, seed::Stream::placement));
    out.meetings = plan_meetings(world, ctx.field, sc.n, rp, place_rng);

    double p_star = 0.0, p_rand = 0.0, t_star = 0.0, t_rand = 0.0;
    for (std::size_t a = 0; a < out.meetings.size(); ++a) {
      const auto& subs = world.subareas()[a];
      std::vector<std::size_t> eligible;
      for (std::size_t j = 0; j < subs.size(); ++j) {
        if (subs[j].size() >= sc.n) eligible.push_back(j);
      }
      Rng sub_rng(seed::derive(trial_seed, seed::Stream::random_subarea, a));
      const auto rnd = eligible[std::uniform_int_distribution<std::size_t>(0, eligible.size() - 1)(sub_rng)];
      const auto rand_eval = evaluate_subarea(subs[rnd], ctx.field, sc.n, sc.r, sc.s, sc.placements, rp.method, sub_rng);
      const auto& star_eval = out.meetings[a].evaluation;
      p_star += out.meetings[a].p_r;
      p_rand += rand_eval.mean_p_r;

      // Retransmissions averaged over each subarea's sampled placements,
      // with the same round-sampling stream on both sides.
      auto mean_rounds = [&](const SubareaEvaluation& ev) {
        double sum = 0.0;
        for (std::size_t k = 0; k < ev.placements.size(); ++k) {
          Rng rt(seed::derive(trial_seed, static_cast<std::uint64_t>(seed::Stream::retransmission), a, k));
          sum += static_cast<double>(count_retransmissions(build_prob_graph(ctx.field, ev.placements[k]), sc.r,
                                                           sc.s, sc.retransmission_max_rounds, rt));
        }
        return sum / static_cast<double>(ev.placements.size());
      };
      t_star += mean_rounds(star_eval);
      t_rand += mean_rounds(rand_eval);
    }
    if (!out.meetings.empty()) {
      const double m = static_cast<double>(out.meetings.size());
      tm.p_r_star = p_star / m;
      tm.p_r_rand = p_rand / m;
      tm.rounds_star = t_star / m;
      tm.rounds_rand = t_rand / m;
    } else {
      // Single area: the only meeting is at the goals.
      Rng rt(seed::derive(trial_seed, seed::Stream::retransmission));
      const auto pg = build_prob_graph(ctx.field, sc.goals);
      Rng pr(seed::derive(trial_seed, seed::Stream::placement));
      tm.p_r_star = tm.p_r_rand = prob_resilience(pg, sc.r, sc.s, rp.method, pr).probability;
      tm.rounds_star = tm.rounds_rand =
          static_cast<double>(count_retransmissions(pg, sc.r, sc.s, sc.retransmission_max_rounds, rt));
    }

    MissionConfig cfg;
    cfg.n = sc.n;
    cfg.F = sc.F;
    cfg.starts = sc.starts;
    cfg.goals = sc.goals;
    cfg.attack = AttackSpec{out.compromised, sc.epsilon.lo, sc.epsilon.hi};
    cfg.eps = sc.eps;
    cfg.max_rounds = sc.max_rounds;
    cfg.alpha = sc.alpha_inflation;
    cfg.gamma = sc.gamma;
    cfg.gamma_factor = sc.gamma_factor;
    cfg.prior = sc.prior();
    cfg.bounds = sc.kernel_bounds;
    cfg.initial_evidence = initial;
    const MissionSeeds ms{seed::derive(trial_seed, seed::Stream::attack),
                          seed::derive(trial_seed, seed::Stream::comm)};

    if (sc.modes != ModeSelection::linear) {
      cfg.mode = ConsensusMode::wmsr;
      out.wmsr = execute_mission(cfg, world, env, ctx.field, out.meetings, ms);
      tm.resilient = learning_errors(*out.wmsr, env);
    }
    if (sc.modes != ModeSelection::wmsr) {
      cfg.mode = ConsensusMode::linear;
      out.linear = execute_mission(cfg, world, env, ctx.field, out.meetings, ms);
      tm.non_resilient = learning_errors(*out.linear, env);
    }

    if (capture_fields) {
      FieldSnapshot snap;
      snap.trial = index;
      snap.truth = env.values;
      RobotState blank;
      snap.initial = posterior_grid(robot_model(blank, sc.prior(), world.sites_ptr(), initial));
      auto first_good = [&](const MissionResult& m) {
        for (std::size_t k = 0; k < m.robots.size(); ++k) {
          if (!m.robots[k].compromised) return posterior_grid(m.models[k]);
        }
        return std::vector<double>{};
      };
      if (out.wmsr) snap.wmsr = first_good(*out.wmsr);
      if (out.linear) snap.linear = first_good(*out.linear);
      out.fields = std::move(snap);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    tm.valid = false;
    tm.diagnostic = e.what();
    tm.resilient.reset();
    tm.non_resilient.reset();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

struct Stat {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;

  friend bool operator==(const Stat&, const Stat&) = default;
};

inline Stat summarize(const std::vector<double>& xs) {
  Stat st;
  st.count = xs.size();
  if (xs.empty()) return st;
  double sum = 0.0;
  for (double x : xs) sum += x;
  st.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - st.mean) * (x - st.mean);
    st.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return st;
}

struct Table1Row {
  std::size_t n = 0;
  std::size_t n_a = 0;
  int F = 0;
  std::string algorithm;  // "R" (W-MSR) or "NR" (linear)
  Stat err_sk, err_lk, err_y;

  friend bool operator==(const Table1Row&, const Table1Row&) = default;
};

struct Table2Row {
  std::size_t n = 0;
  int r = 0;
  int s = 0;
  std::string subarea;  // "sb_star" or "sb_rand"
  Stat p_r, rounds;

  friend bool operator==(const Table2Row&, const Table2Row&) = default;
};

// Per-trial paired differences.
struct PairedRow {
  std::string metric;
  Stat difference;

  friend bool operator==(const PairedRow&, const PairedRow&) = default;
};

struct Report {
  int grid_width = 0;
  int grid_height = 0;
  std::uint64_t master_seed = 0;
  std::size_t trials = 0;
  std::size_t valid = 0;
  std::size_t invalid = 0;
  bool unreliable = false;
  bool outside_attack_model = false;
  std::string comm_model;
  std::vector<std::string> warnings;
  std::vector<Table1Row> table1;
  std::vector<Table2Row> table2;
  std::vector<PairedRow> paired;
  std::vector<TrialMetrics> trial_metrics;
  std::vector<FieldSnapshot> fields;
};

inline Report aggregate(const Scenario& sc, std::vector<TrialMetrics> trials,
                        std::vector<FieldSnapshot> fields = {}) {
  Report rep;
  rep.grid_width = sc.width;
  rep.grid_height = sc.height;
  rep.master_seed = sc.master_seed;
  rep.trials = trials.size();
  rep.outside_attack_model = sc.outside_attack_model();
  rep.comm_model = std::string(to_string(sc.comm.kind)) + " (synthetic)";
  rep.warnings = sc.warnings;

  std::vector<double> sk_r, lk_r, y_r, sk_nr, lk_nr, y_nr, pr_s, pr_r, rd_s, rd_r;
  std::vector<double> d_y, d_sk, d_lk, d_pr, d_rd;
  for (const auto& t : trials) {
    if (!t.valid) {
      ++rep.invalid;
      continue;
    }
    ++rep.valid;
    if (t.resilient) {
      sk_r.push_back(t.resilient->err_sk);
      lk_r.push_back(t.resilient->err_lk);
      y_r.push_back(t.resilient->err_y);
    }
    if (t.non_resilient) {
      sk_nr.push_back(t.non_resilient->err_sk);
      lk_nr.push_back(t.non_resilient->err_lk);
      y_nr.push_back(t.non_resilient->err_y);
    }
    if (t.resilient && t.non_resilient) {
      d_y.push_back(t.non_resilient->err_y - t.resilient->err_y);
      d_sk.push_back(t.non_resilient->err_sk - t.resilient->err_sk);
      d_lk.push_back(t.non_resilient->err_lk - t.resilient->err_lk);
    }
    pr_s.push_back(t.p_r_star);
    pr_r.push_back(t.p_r_rand);
    rd_s.push_back(t.rounds_star);
    rd_r.push_back(t.rounds_rand);
    d_pr.push_back(t.p_r_star - t.p_r_rand);
    d_rd.push_back(t.rounds_rand - t.rounds_star);
  }
  rep.unreliable = rep.invalid * 10 > rep.trials;

  if (sc.modes != ModeSelection::linear) {
    rep.table1.push_back({sc.n, sc.n_a, sc.F, "R", summarize(sk_r), summarize(lk_r), summarize(y_r)});
  }
  if (sc.modes != ModeSelection::wmsr) {
    rep.table1.push_back({sc.n, sc.n_a, sc.F, "NR", summarize(sk_nr), summarize(lk_nr), summarize(y_nr)});
  }
  rep.table2.push_back({sc.n, sc.r, sc.s, "sb_star", summarize(pr_s), summarize(rd_s)});
  rep.table2.push_back({sc.n, sc.r, sc.s, "sb_rand", summarize(pr_r), summarize(rd_r)});
  if (sc.modes == ModeSelection::both) {
    rep.paired.push_back({"err_y_NR_minus_R", summarize(d_y)});
    rep.paired.push_back({"err_sk_NR_minus_R", summarize(d_sk)});
    rep.paired.push_back({"err_lk_NR_minus_R", summarize(d_lk)});
  }
  rep.paired.push_back({"p_r_star_minus_rand", summarize(d_pr)});
  rep.paired.push_back({"rounds_rand_minus_star", summarize(d_rd)});
  rep.trial_metrics = std::move(trials);
  rep.fields = std::move(fields);
  return rep;
}

// All trials over a bounded worker pool; results are folded in trial order so
// the report does not depend on `workers`.
template <class Progress = std::nullptr_t>
Report run_experiment(const ExperimentContext& ctx, std::size_t workers, Progress progress = nullptr) {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  const auto& sc = ctx.scenario;
  const std::size_t trials = sc.trials;
  std::vector<TrialMetrics> metrics(trials);
  std::vector<std::optional<FieldSnapshot>> snaps(trials);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::exception_ptr failure;
  std::mutex mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= trials) return;
      try {
        auto res = run_trial(ctx, i, i < sc.field_snapshots);
        metrics[i] = std::move(res.metrics);
        snaps[i] = std::move(res.fields);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next.store(trials);
        return;
      }
      const auto d = done.fetch_add(1) + 1;
      if constexpr (!std::is_same_v<Progress, std::nullptr_t>) {
        std::lock_guard lock(mu);
        progress(d, trials);
      }
    }
  };
  const std::size_t threads = std::min(workers, trials);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<FieldSnapshot> fields;
  for (auto& s : snaps) {
    if (s) fields.push_back(std::move(*s));
  }
  return aggregate(sc, std::move(metrics), std::move(fields));
}

inline Report run_experiment(const Scenario& sc, std::size_t workers) {
  return run_experiment(ExperimentContext::make(sc), workers);
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void to_json(nlohmann::json& j, const Stat& s) {
  j = nlohmann::json{{"mean", s.mean}, {"se", s.se}, {"count", s.count}};
}
inline void from_json(const nlohmann::json& j, Stat& s) {
  j.at("mean").get_to(s.mean);
  j.at("se").get_to(s.se);
  j.at("count").get_to(s.count);
}

inline void to_json(nlohmann::json& j, const Table1Row& r) {
  j = nlohmann::json{{"n", r.n},           {"n_a", r.n_a},       {"F", r.F},
                     {"algorithm", r.algorithm}, {"err_sk", r.err_sk}, {"err_lk", r.err_lk},
                     {"err_y", r.err_y}};
}
inline void from_json(const nlohmann::json& j, Table1Row& r) {
  j.at("n").get_to(r.n);
  j.at("n_a").get_to(r.n_a);
  j.at("F").get_to(r.F);
  j.at("algorithm").get_to(r.algorithm);
  j.at("err_sk").get_to(r.err_sk);
  j.at("err_lk").get_to(r.err_lk);
  j.at("err_y").get_to(r.err_y);
}

inline void to_json(nlohmann::json& j, const Table2Row& r) {
  j = nlohmann::json{{"n", r.n}, {"r", r.r}, {"s", r.s}, {"subarea", r.subarea},
                     {"p_r", r.p_r}, {"rounds", r.rounds}};
}
inline void from_json(const nlohmann::json& j, Table2Row& r) {
  j.at("n").get_to(r.n);
  j.at("r").get_to(r.r);
  j.at("s").get_to(r.s);
  j.at("subarea").get_to(r.subarea);
  j.at("p_r").get_to(r.p_r);
  j.at("rounds").get_to(r.rounds);
}

inline void to_json(nlohmann::json& j, const PairedRow& r) {
  j = nlohmann::json{{"metric", r.metric}, {"difference", r.difference}};
}
inline void from_json(const nlohmann::json& j, PairedRow& r) {
  j.at("metric").get_to(r.metric);
  j.at("difference").get_to(r.difference);
}

inline void to_json(nlohmann::json& j, const LearningErrors& e) {
  j = nlohmann::json{{"err_sk", e.err_sk}, {"err_lk", e.err_lk}, {"err_y", e.err_y},
                     {"consensus_rounds", e.consensus_rounds}, {"converged", e.converged}};
}
inline void from_json(const nlohmann::json& j, LearningErrors& e) {
  j.at("err_sk").get_to(e.err_sk);
  j.at("err_lk").get_to(e.err_lk);
  j.at("err_y").get_to(e.err_y);
  j.at("consensus_rounds").get_to(e.consensus_rounds);
  j.at("converged").get_to(e.converged);
}

inline void to_json(nlohmann::json& j, const TrialMetrics& t) {
  j = nlohmann::json{{"trial", t.trial},
                     {"valid", t.valid},
                     {"diagnostic", t.diagnostic},
                     {"true_sk", t.true_sk},
                     {"true_lk", t.true_lk},
                     {"R", t.resilient ? nlohmann::json(*t.resilient) : nlohmann::json(nullptr)},
                     {"NR", t.non_resilient ? nlohmann::json(*t.non_resilient) : nlohmann::json(nullptr)},
                     {"p_r_star", t.p_r_star},
                     {"p_r_rand", t.p_r_rand},
                     {"rounds_star", t.rounds_star},
                     {"rounds_rand", t.rounds_rand}};
}
inline void from_json(const nlohmann::json& j, TrialMetrics& t) {
  j.at("trial").get_to(t.trial);
  j.at("valid").get_to(t.valid);
  j.at("diagnostic").get_to(t.diagnostic);
  j.at("true_sk").get_to(t.true_sk);
  j.at("true_lk").get_to(t.true_lk);
  if (!j.at("R").is_null()) t.resilient = j.at("R").get<LearningErrors>();
  if (!j.at("NR").is_null()) t.non_resilient = j.at("NR").get<LearningErrors>();
  j.at("p_r_star").get_to(t.p_r_star);
  j.at("p_r_rand").get_to(t.p_r_rand);
  j.at("rounds_star").get_to(t.rounds_star);
  j.at("rounds_rand").get_to(t.rounds_rand);
}

inline nlohmann::json report_meta(const Report& r) {
  return {{"grid", {{"width", r.grid_width}, {"height", r.grid_height}}},
          {"master_seed", r.master_seed},
          {"trials", r.trials},
          {"valid", r.valid},
          {"invalid", r.invalid},
          {"unreliable", r.unreliable},
          {"outside_attack_model", r.outside_attack_model},
          {"comm_model", r.comm_model},
          {"warnings", r.warnings}};
}

inline const std::vector<std::string>& table1_columns() {
  static const std::vector<std::string> cols{"n", "n_a", "F", "algorithm", "err_sk", "err_sk_se",
                                             "err_lk", "err_lk_se", "err_y", "err_y_se", "trials"};
  return cols;
}

inline const std::vector<std::string>& table2_columns() {
  static const std::vector<std::string> cols{"n", "r", "s", "subarea", "p_r", "p_r_se",
                                             "rounds", "rounds_se", "trials"};
  return cols;
}

inline const std::vector<std::string>& paired_columns() {
  static const std::vector<std::string> cols{"metric", "mean", "se", "trials"};
  return cols;
}

inline const std::vector<std::string>& trial_columns() {
  static const std::vector<std::string> cols{
      "trial",     "valid",       "true_sk",     "true_lk",   "err_sk_R",   "err_lk_R",
      "err_y_R",   "rounds_R",    "err_sk_NR",   "err_lk_NR", "err_y_NR",   "rounds_NR",
      "p_r_star",  "p_r_rand",    "rounds_star", "rounds_rand", "diagnostic"};
  return cols;
}

namespace detail {

inline std::string csv_join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out + '\n';
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + p.string() + "'");
}

}  // namespace detail

inline std::string table1_csv(const Report& r) {
  std::string out = detail::csv_join(table1_columns());
  for (const auto& row : r.table1) {
    out += detail::csv_join({std::to_string(row.n), std::to_string(row.n_a), std::to_string(row.F), row.algorithm,
                             format_number(row.err_sk.mean), format_number(row.err_sk.se),
                             format_number(row.err_lk.mean), format_number(row.err_lk.se),
                             format_number(row.err_y.mean), format_number(row.err_y.se),
                             std::to_string(row.err_y.count)});
  }
  return out;
}

inline std::string table2_csv(const Report& r) {
  std::string out = detail::csv_join(table2_columns());
  for (const auto& row : r.table2) {
    out += detail::csv_join({std::to_string(row.n), std::to_string(row.r), std::to_string(row.s), row.subarea,
                             format_number(row.p_r.mean), format_number(row.p_r.se),
                             format_number(row.rounds.mean), format_number(row.rounds.se),
                             std::to_string(row.p_r.count)});
  }
  return out;
}

inline std::string paired_csv(const Report& r) {
  std::string out = detail::csv_join(paired_columns());
  for (const auto& row : r.paired) {
    out += detail::csv_join({row.metric, format_number(row.difference.mean), format_number(row.difference.se),
                             std::to_string(row.difference.count)});
  }
  return out;
}

inline std::string trials_csv(const Report& r) {
  std::string out = detail::csv_join(trial_columns());
  auto opt = [](const std::optional<LearningErrors>& e, double LearningErrors::*f) {
    return e ? format_number((*e).*f) : std::string();
  };
  for (const auto& t : r.trial_metrics) {
    out += detail::csv_join({std::to_string(t.trial), t.valid ? "1" : "0", format_number(t.true_sk),
                             format_number(t.true_lk), opt(t.resilient, &LearningErrors::err_sk),
                             opt(t.resilient, &LearningErrors::err_lk), opt(t.resilient, &LearningErrors::err_y),
                             opt(t.resilient, &LearningErrors::consensus_rounds),
                             opt(t.non_resilient, &LearningErrors::err_sk),
                             opt(t.non_resilient, &LearningErrors::err_lk),
                             opt(t.non_resilient, &LearningErrors::err_y),
                             opt(t.non_resilient, &LearningErrors::consensus_rounds), format_number(t.p_r_star),
                             format_number(t.p_r_rand), format_number(t.rounds_star),
                             format_number(t.rounds_rand), detail::csv_escape(t.diagnostic)});
  }
  return out;
}

inline nlohmann::json table1_json(const Report& r) {
  return {{"meta", report_meta(r)}, {"rows", r.table1}, {"paired", r.paired}};
}
inline nlohmann::json table2_json(const Report& r) {
  return {{"meta", report_meta(r)}, {"rows", r.table2}};
}
inline nlohmann::json trials_json(const Report& r) {
  return {{"meta", report_meta(r)}, {"trials", r.trial_metrics}};
}

// Row-major height x width matrix, one grid row per line.
inline std::string grid_text(const std::vector<double>& values, int width, int height) {
  if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ConfigError("grid_text: value count does not match grid shape");
  }
  std::string out;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (x) out += ',';
      out += format_number(values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                                  static_cast<std::size_t>(x)]);
    }
    out += '\n';
  }
  return out;
}

enum class OutputFormat { csv, json };

inline OutputFormat parse_output_format(std::string_view s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw ConfigError("format must be csv or json");
}

// Writes table1, table2, paired and trials in `format`, plus fields/*.csv.
inline std::vector<std::filesystem::path> emit_outputs(const Report& r, OutputFormat format,
                                                       const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "fields", ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  std::vector<fs::path> written;
  auto put = [&](const fs::path& p, const std::string& text) {
    detail::write_text(p, text);
    written.push_back(p);
  };
  if (format == OutputFormat::csv) {
    put(out_dir / "table1.csv", table1_csv(r));
    put(out_dir / "table2.csv", table2_csv(r));
    put(out_dir / "paired.csv", paired_csv(r));
    put(out_dir / "trials.csv", trials_csv(r));
  } else {
    put(out_dir / "table1.json", table1_json(r).dump(2) + "\n");
    put(out_dir / "table2.json", table2_json(r).dump(2) + "\n");
    put(out_dir / "trials.json", trials_json(r).dump(2) + "\n");
  }
  for (const auto& f : r.fields) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "trial_%04zu_", f.trial);
    put(out_dir / "fields" / (std::string(stem) + "truth.csv"), grid_text(f.truth, r.grid_width, r.grid_height));
    put(out_dir / "fields" / (std::string(stem) + "initial.csv"), grid_text(f.initial, r.grid_width, r.grid_height));
    if (!f.wmsr.empty()) {
      put(out_dir / "fields" / (std::string(stem) + "wmsr.csv"), grid_text(f.wmsr, r.grid_width, r.grid_height));
    }
    if (!f.linear.empty()) {
      put(out_dir / "fields" / (std::string(stem) + "linear.csv"), grid_text(f.linear, r.grid_width, r.grid_height));
    }
  }
  return written;
}

}  // namespace rmipp
