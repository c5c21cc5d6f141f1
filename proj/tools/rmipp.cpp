// Command-line front end: run experiments, inspect single trials, query the
// probability of resilience for a placement, and lint scenario files.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rmipp/harness.hpp"

namespace {

using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitInfeasible = 4;

struct Options {
  std::string scenario;
  std::string out_dir = "out";
  std::size_t workers = 1;
  std::string format = "csv";
  std::size_t trials = 0;  // 0: keep the scenario value
  std::string mode;        // empty: keep the scenario value
  std::size_t index = 0;
  std::string positions;
  std::string method = "exact";
  std::size_t samples = 0;
  int r = 0;
  int s = 0;
  bool quiet = false;
};

rmipp::Scenario load(const Options& o) {
  auto sc = rmipp::load_scenario(o.scenario);
  rmipp::apply_env_overrides(sc);
  if (o.trials > 0) sc.trials = o.trials;
  if (!o.mode.empty()) sc.modes = rmipp::parse_mode_selection(o.mode);
  rmipp::validate(sc);
  for (const auto& w : sc.warnings) std::cerr << "warning: " << w << "\n";
  return sc;
}

std::vector<rmipp::LocationId> parse_positions(const std::string& text) {
  std::vector<rmipp::LocationId> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const auto v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<rmipp::LocationId>(v));
    } catch (const std::exception&) {
      throw rmipp::ConfigError("--positions: '" + item + "' is not a location id");
    }
  }
  if (out.empty()) throw rmipp::ConfigError("--positions: expected a comma-separated id list");
  return out;
}

int cmd_run(const Options& o) {
  const auto sc = load(o);
  const auto format = rmipp::parse_output_format(o.format);
  const auto ctx = rmipp::ExperimentContext::make(sc);
  auto progress = [&](std::size_t done, std::size_t total) {
    if (!o.quiet) std::cerr << "\rtrial " << done << "/" << total << std::flush;
  };
  const auto report = rmipp::run_experiment(ctx, o.workers, progress);
  if (!o.quiet) std::cerr << "\n";
  const auto files = rmipp::emit_outputs(report, format, o.out_dir);
  std::cout << rmipp::table1_csv(report) << "\n" << rmipp::table2_csv(report);
  if (report.unreliable) {
    std::cerr << "warning: report unreliable, " << report.invalid << " of " << report.trials
              << " trials invalid\n";
  }
  std::cerr << "wrote " << files.size() << " files to " << o.out_dir << "\n";
  return 0;
}

int cmd_trial(const Options& o) {
  const auto sc = load(o);
  const auto ctx = rmipp::ExperimentContext::make(sc);
  const auto res = rmipp::run_trial(ctx, o.index, true);
  json j = res.metrics;
  j["compromised"] = res.compromised;
  json meetings = json::array();
  for (std::size_t a = 0; a < res.meetings.size(); ++a) {
    const auto& m = res.meetings[a];
    json sub = json::array();
    for (double p : m.subarea_p_r) sub.push_back(std::isnan(p) ? json(nullptr) : json(p));
    meetings.push_back({{"area", a}, {"subarea", m.subarea}, {"p_r", m.p_r},
                        {"placement", m.placement}, {"subarea_p_r", sub}});
  }
  j["meetings"] = meetings;
  auto mission_json = [](const rmipp::MissionResult& m) {
    json robots = json::array();
    for (const auto& rb : m.robots) {
      robots.push_back({{"id", rb.id},
                        {"compromised", rb.compromised},
                        {"measurements", rb.measurements.size()},
                        {"signal", rb.fitted.signal},
                        {"length", rb.fitted.length}});
    }
    json logs = json::array();
    for (const auto& l : m.logs) {
      logs.push_back({{"rounds", l.rounds}, {"converged", l.converged}, {"final_spread", l.final_spread}});
    }
    json plans = json::array();
    for (const auto& p : m.plans) {
      json costs = json::array();
      for (const auto& path : p.paths) costs.push_back(path.cost);
      plans.push_back({{"area", p.area}, {"gamma", p.gamma}, {"path_costs", costs},
                       {"intermediates", p.intermediates}});
    }
    return json{{"robots", robots}, {"meetings", logs}, {"plans", plans}};
  };
  if (res.wmsr) j["wmsr"] = mission_json(*res.wmsr);
  if (res.linear) j["linear"] = mission_json(*res.linear);
  std::cout << j.dump(2) << "\n";
  if (res.fields && !o.out_dir.empty()) {
    rmipp::Report rep;
    rep.grid_width = sc.width;
    rep.grid_height = sc.height;
    rep.fields.push_back(*res.fields);
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(o.out_dir) / "fields", ec);
    if (ec) throw rmipp::IoError("cannot create output directory '" + o.out_dir + "'");
    const auto& f = *res.fields;
    char stem[32];
    std::snprintf(stem, sizeof(stem), "trial_%04zu_", f.trial);
    const auto dir = fs::path(o.out_dir) / "fields";
    rmipp::detail::write_text(dir / (std::string(stem) + "truth.csv"), rmipp::grid_text(f.truth, sc.width, sc.height));
    rmipp::detail::write_text(dir / (std::string(stem) + "initial.csv"), rmipp::grid_text(f.initial, sc.width, sc.height));
    if (!f.wmsr.empty()) {
      rmipp::detail::write_text(dir / (std::string(stem) + "wmsr.csv"), rmipp::grid_text(f.wmsr, sc.width, sc.height));
    }
    if (!f.linear.empty()) {
      rmipp::detail::write_text(dir / (std::string(stem) + "linear.csv"), rmipp::grid_text(f.linear, sc.width, sc.height));
    }
  }
  return res.metrics.valid ? 0 : kExitInfeasible;
}

int cmd_presilience(const Options& o) {
  const auto sc = load(o);
  const auto ctx = rmipp::ExperimentContext::make(sc);
  const auto positions = parse_positions(o.positions);
  for (auto id : positions) {
    if (id >= ctx.world.size()) throw rmipp::ConfigError("--positions: location id out of range");
  }
  const int r = o.r > 0 ? o.r : sc.r;
  const int s = o.s > 0 ? o.s : sc.s;
  rmipp::ResilienceMethod method;
  if (o.method == "exact") {
    method = rmipp::ExactMethod{};
  } else if (o.method == "monte_carlo") {
    method = rmipp::MonteCarloMethod{o.samples > 0 ? o.samples : sc.samples};
  } else {
    throw rmipp::ConfigError("--method must be exact or monte_carlo");
  }
  const auto pg = rmipp::build_prob_graph(ctx.field, positions);
  rmipp::Rng rng(rmipp::seed::derive(sc.master_seed, rmipp::seed::Stream::placement));
  const auto est = rmipp::prob_resilience(pg, r, s, method, rng);
  json j{{"positions", positions}, {"r", r},
         {"s", s},
         {"p_r", est.probability},
         {"std_error", est.std_error},
         {"evaluations", est.evaluations},
         {"exact", est.exact}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_validate(const Options& o) {
  const auto sc = load(o);
  const auto ctx = rmipp::ExperimentContext::make(sc);
  std::cout << "ok: " << sc.width << "x" << sc.height << " grid, " << sc.m_areas << " areas x "
            << sc.f_subareas << " subareas, n=" << sc.n << " n_a=" << sc.n_a << " F=" << sc.F
            << " (r,s)=(" << sc.r << "," << sc.s << "), trials=" << sc.trials
            << ", comm=" << rmipp::to_string(sc.comm.kind) << " with " << ctx.field.zones().size()
            << " zones\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resilient multi-robot informative path planning simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_scenario = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "Scenario JSON file")->required();
  };
  auto* run = app.add_subcommand("run", "Run a Monte Carlo experiment and write tables");
  add_scenario(run);
  run->add_option("--out", o.out_dir, "Output directory");
  run->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--trials", o.trials, "Override the scenario trial count")->check(CLI::PositiveNumber);
  run->add_option("--mode", o.mode, "Consensus rules to run")->check(CLI::IsMember({"wmsr", "linear", "both"}));
  run->add_flag("--quiet", o.quiet, "No progress output");

  auto* trial = app.add_subcommand("trial", "Run one trial and print a verbose record");
  add_scenario(trial);
  trial->add_option("--index", o.index, "Trial index");
  trial->add_option("--mode", o.mode, "Consensus rules to run")->check(CLI::IsMember({"wmsr", "linear", "both"}));
  trial->add_option("--out", o.out_dir, "Directory for field grids");

  auto* pres = app.add_subcommand("presilience", "Probability of resilience for a team placement");
  add_scenario(pres);
  pres->add_option("--positions", o.positions, "Comma-separated location ids")->required();
  pres->add_option("--method", o.method, "exact or monte_carlo")->check(CLI::IsMember({"exact", "monte_carlo"}));
  pres->add_option("--samples", o.samples, "Monte Carlo samples");
  pres->add_option("--r", o.r, "Override r");
  pres->add_option("--s", o.s, "Override s");

  auto* val = app.add_subcommand("validate", "Check a scenario file");
  add_scenario(val);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(o);
    if (trial->parsed()) {
      if (o.out_dir == "out") o.out_dir.clear();
      return cmd_trial(o);
    }
    if (pres->parsed()) return cmd_presilience(o);
    if (val->parsed()) return cmd_validate(o);
  } catch (const rmipp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const rmipp::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const rmipp::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
