#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hjmra/config.hpp"
#include "hjmra/contour.hpp"
#include "hjmra/scenarios.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hjmra;

namespace {

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kConfigError = 2,
  kSolverFailure = 3,
  kInfeasible = 4,
  kViolated = 5,
};

struct ExitError : std::runtime_error {
  ExitError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string log_level = "info";
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
}

Scenario scenario_from(const Common& c) {
  if (c.config.empty()) throw ConfigError("", "--config is required");
  Scenario sc = scenario_from_json(read_json(c.config));
  if (c.threads > 0) sc.cascade.threads = c.threads;
  if (c.seed && sc.sim.disturbance.kind == DisturbancePolicy::Kind::uniform_random) sc.sim.disturbance.seed = *c.seed;
  return sc;
}

std::shared_ptr<const CascadeResult> solve(const Scenario& sc) {
  spdlog::info("solving {} ({} legs, {} grid points)", sc.name, sc.task.size(), sc.grid.num_points());
  try {
    auto result = std::make_shared<CascadeResult>(solve_scenario(sc));
    for (const auto& st : result->stages) {
      spdlog::info("stage {} (leg {}) solved in {:.2f} s", st.stage, st.target_index, st.solve_seconds);
    }
    return result;
  } catch (const SolverError& e) {
    throw ExitError(kSolverFailure, std::string("solver failure: ") + e.what());
  }
}

std::shared_ptr<const CascadeResult> cascade_for(const Scenario& sc, const std::string& artifact) {
  if (artifact.empty()) return solve(sc);
  spdlog::info("loading cascade from {}", artifact);
  try {
    return std::make_shared<CascadeResult>(load_cascade(artifact));
  } catch (const std::exception& e) {
    throw ExitError(kConfigError, "cannot load artifact " + artifact + ": " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ExitError(kInternal, "cannot create " + dir.string() + ": " + ec.message());
}

json report_json(const RunReport& r) {
  json j;
  j["satisfied"] = r.check.satisfied;
  j["completed"] = r.traj.completed;
  j["taus"] = r.check.taus;
  j["legs_done"] = r.check.legs_done;
  if (!r.check.satisfied) j["reason"] = r.check.reason;
  json sw = json::array();
  double min_margin = std::numeric_limits<double>::infinity();
  for (const auto& e : r.traj.switches) {
    sw.push_back({{"t", e.time}, {"leg", e.completed_target}, {"target_margin", e.target_margin},
                  {"incoming_value", e.incoming_value}});
    min_margin = std::min(min_margin, e.target_margin);
  }
  j["switches"] = sw;
  if (!r.traj.switches.empty()) j["min_switch_margin"] = min_margin;
  j["margin_exceptions"] = r.traj.margin_exceptions.size();
  if (r.traj.violation) j["violation"] = {{"t", r.traj.violation->time}, {"reason", r.traj.violation->reason}};
  if (r.word_accepted) {
    j["word_accepted"] = *r.word_accepted;
    j["word_length"] = r.word_length;
  }
  j["lipschitz"] = r.lipschitz;
  j["eps_num"] = r.eps_num;
  j["end_time"] = r.traj.times.empty() ? 0.0 : r.traj.times.back();
  j["final_state"] = r.traj.states.empty() ? std::vector<double>{} : r.traj.states.back();
  j["runtime_s"] = r.seconds;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ExitError(kInternal, "cannot write " + path.string());
  out << text;
}

void write_trajectory(const fs::path& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw ExitError(kInternal, "cannot write " + path.string());
  write_trajectory_csv(traj, out);
}

std::string describe(const Scenario& sc, const std::string& config_path) {
  json d;
  d["name"] = sc.name;
  if (!config_path.empty()) d["config"] = read_json(config_path);
  return d.dump();
}

// ---------------------------------------------------------------------------

int cmd_solve(const Common& c) {
  const Scenario sc = scenario_from(c);
  const auto cascade = solve(sc);
  const fs::path dir = fs::path(c.out) / "cascade";
  ensure_dir(dir);
  save_cascade(*cascade, dir, describe(sc, c.config));
  spdlog::info("wrote {}", dir.string());
  if (!sc.x0.empty()) {
    const auto rep = query_feasible(*cascade, sc.x0, sc.task.t0 + sc.time_shift);
    std::cout << (rep.feasible ? "feasible" : "infeasible") << " at x0, margin " << rep.margin << "\n";
  }
  return kOk;
}

int cmd_check(const Common& c, const std::string& artifact, std::vector<double> x0, std::optional<double> t) {
  const Scenario sc = scenario_from(c);
  if (x0.empty()) x0 = sc.x0;
  if (static_cast<int>(x0.size()) != sc.sys.n) {
    throw ExitError(kConfigError, "x0 needs " + std::to_string(sc.sys.n) + " components");
  }
  const auto cascade = cascade_for(sc, artifact);
  const double tq = t.value_or(sc.task.t0) + sc.time_shift;
  const auto rep = query_feasible(*cascade, x0, tq);
  json j{{"feasible", rep.feasible}, {"margin", rep.margin}, {"out_of_domain", rep.out_of_domain}, {"t", tq}};
  std::cout << (rep.feasible ? "feasible" : "infeasible") << ", margin " << rep.margin << "\n" << j.dump() << "\n";
  return rep.feasible ? kOk : kInfeasible;
}

int cmd_simulate(const Common& c, const std::string& artifact, std::vector<double> x0, bool force) {
  Scenario sc = scenario_from(c);
  if (!x0.empty()) sc.x0 = std::move(x0);
  if (static_cast<int>(sc.x0.size()) != sc.sys.n) throw ExitError(kConfigError, "x0 missing or of the wrong size");
  const auto cascade = cascade_for(sc, artifact);
  const auto feas = query_feasible(*cascade, sc.x0, sc.task.t0 + sc.time_shift);
  if (!feas.feasible) {
    spdlog::error("initial state infeasible (margin {:.4g})", feas.margin);
    if (!force) return kInfeasible;
  }
  const RunReport rep = run_scenario(sc, cascade);
  const fs::path dir(c.out);
  ensure_dir(dir);
  write_trajectory(dir / "trajectory.csv", rep.traj);
  json summary = report_json(rep);
  summary["scenario"] = sc.name;
  summary["initial_margin"] = feas.margin;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  std::cout << (rep.check.satisfied ? "satisfied" : "violated") << "\n";
  return rep.check.satisfied ? kOk : kViolated;
}

int cmd_ltl(const Common& c, bool solve_plan) {
  const Scenario sc = scenario_from(c);
  if (!sc.ltl) throw ExitError(kConfigError, "task.ltl is required for the ltl command");
  const auto [fsa, plan] = scenario_plan(sc);
  const fs::path dir(c.out);
  ensure_dir(dir);
  write_text(dir / "fsa.json", fsa_to_json(fsa) + "\n");
  json plans = json::array();
  for (const auto& p : ltl::enumerate_plans(fsa)) plans.push_back(ltl::plan_to_string(fsa, p));
  json j{{"states", fsa.num_states()}, {"plans", plans}, {"selected", ltl::plan_to_string(fsa, plan)}};
  write_text(dir / "plans.json", j.dump(2) + "\n");
  std::cout << fsa.num_states() << " states, " << plans.size() << " plans, selected " << ltl::plan_to_string(fsa, plan)
            << "\n";
  if (solve_plan) {
    const auto cascade = solve(sc);
    ensure_dir(dir / "cascade");
    save_cascade(*cascade, dir / "cascade", describe(sc, c.config));
  }
  return kOk;
}

int cmd_plotdata(const std::string& artifact, const std::string& trajectory, int leg, std::vector<int> axes,
                 std::vector<double> point, double t, double level, const std::string& out_path) {
  if (axes.size() != 2) throw ExitError(kConfigError, "--axes needs two axis indices");
  std::ostringstream buf;
  if (!trajectory.empty()) {
    std::ifstream in(trajectory);
    if (!in) throw ExitError(kConfigError, "cannot read " + trajectory);
    std::string line;
    std::getline(in, line);
    buf << "t,x,y\n";
    while (std::getline(in, line)) {
      std::vector<std::string> cols;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) cols.push_back(cell);
      const auto a = static_cast<std::size_t>(axes[0]) + 1, b = static_cast<std::size_t>(axes[1]) + 1;
      if (cols.size() <= std::max(a, b)) throw ExitError(kConfigError, "axis index beyond the trajectory state");
      buf << cols[0] << ',' << cols[a] << ',' << cols[b] << '\n';
    }
  } else {
    if (artifact.empty()) throw ExitError(kConfigError, "give --artifact or --trajectory");
    CascadeResult cascade;
    try {
      cascade = load_cascade(artifact);
    } catch (const std::exception& e) {
      throw ExitError(kConfigError, "cannot load artifact " + artifact + ": " + e.what());
    }
    if (leg < 1 || leg > cascade.size()) throw ExitError(kConfigError, "--leg out of range");
    SliceSpec spec;
    spec.axis_x = axes[0];
    spec.axis_y = axes[1];
    spec.point = std::move(point);
    spec.t = t;
    spec.level = level;
    std::vector<Polyline> contours;
    try {
      contours = slice_contours(*cascade.for_target(leg).value, spec);
    } catch (const std::invalid_argument& e) {
      throw ExitError(kConfigError, e.what());
    }
    write_contours_csv(contours, buf);
    spdlog::info("{} contours", contours.size());
  }
  if (out_path.empty() || out_path == "-") {
    std::cout << buf.str();
  } else {
    write_text(out_path, buf.str());
  }
  return kOk;
}

int cmd_casestudy(const Common& c, const std::string& name, bool save_fields) {
  Scenario sc;
  try {
    sc = scenario_by_name(name);
  } catch (const std::invalid_argument& e) {
    throw ExitError(kConfigError, e.what());
  }
  if (name != "si" && name != "di" && name != "spacecraft" && name != "unicycle") {
    throw ExitError(kConfigError, "case study must be si, di, spacecraft or unicycle");
  }
  if (c.threads > 0) sc.cascade.threads = c.threads;
  const auto start = std::chrono::steady_clock::now();
  const auto cascade = solve(sc);
  const fs::path dir = fs::path(c.out) / name;
  ensure_dir(dir);
  if (save_fields) save_cascade(*cascade, dir / "cascade", describe(sc, ""));

  struct Run {
    std::string label;
    std::optional<double> shift;
    std::optional<DisturbancePolicy> dist;
  };
  std::vector<Run> runs;
  if (name == "spacecraft") {
    runs.push_back({"worst_case", std::nullopt, DisturbancePolicy::worst_case()});
    const std::uint64_t base = c.seed.value_or(1);
    for (std::uint64_t k = 0; k < 10; ++k) {
      runs.push_back({"seed_" + std::to_string(base + k), std::nullopt, DisturbancePolicy::uniform_random(base + k)});
    }
  } else if (name == "unicycle") {
    for (double s : {0.0, 10.0, 35.0}) runs.push_back({"t0_" + std::to_string(static_cast<int>(s)), s, std::nullopt});
  } else {
    runs.push_back({"nominal", std::nullopt, std::nullopt});
  }

  json summary;
  summary["scenario"] = name;
  json jr = json::object();
  int code = kOk;
  for (const auto& run : runs) {
    const double shift = run.shift.value_or(sc.time_shift);
    const auto feas = query_feasible(*cascade, sc.x0, sc.task.t0 + shift);
    if (!feas.feasible) {
      spdlog::warn("{}: initial state infeasible (margin {:.4g})", run.label, feas.margin);
      code = std::max<int>(code, kInfeasible);
    }
    const RunReport rep = run_scenario(sc, cascade, run.shift, run.dist);
    write_trajectory(dir / ("trajectory_" + run.label + ".csv"), rep.traj);
    json r = report_json(rep);
    r["initial_margin"] = feas.margin;
    r["time_shift"] = shift;
    jr[run.label] = r;
    spdlog::info("{}: {} (end t = {:.2f})", run.label, rep.check.satisfied ? "satisfied" : "violated",
                 rep.traj.times.empty() ? 0.0 : rep.traj.times.back());
    if (!rep.check.satisfied) code = kViolated;
  }
  summary["runs"] = jr;
  summary["runtime_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reach-avoid synthesis with Hamilton-Jacobi value cascades"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&c](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", c.config, "Run configuration (JSON)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "Output directory");
    sub->add_option("--seed", c.seed, "Seed for random disturbances");
    sub->add_option("--threads", c.threads, "Solver threads (default HJMRA_THREADS or 1)");
    sub->add_option("--log-level", c.log_level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
  };

  std::string artifact, trajectory, out_file;
  std::vector<double> x0, point;
  std::optional<double> t;
  double t_plot = 0.0, level = 0.0;
  bool force = false, no_solve = false, save_fields = false;
  int leg = 1;
  std::vector<int> axes{0, 1};
  std::string study;

  auto* solve_cmd = app.add_subcommand("solve", "Solve the cascade and write value fields with a manifest");
  add_common(solve_cmd, true);

  auto* check_cmd = app.add_subcommand("check", "Feasibility of a state");
  add_common(check_cmd, true);
  check_cmd->add_option("--artifact", artifact, "Solved cascade directory (solves when omitted)");
  check_cmd->add_option("--x0", x0, "State, comma separated")->delimiter(',');
  check_cmd->add_option("--t", t, "Query time (default t0)");

  auto* sim_cmd = app.add_subcommand("simulate", "Closed-loop run: trajectory CSV and summary JSON");
  add_common(sim_cmd, true);
  sim_cmd->add_option("--artifact", artifact, "Solved cascade directory (solves when omitted)");
  sim_cmd->add_option("--x0", x0, "Initial state, comma separated")->delimiter(',');
  sim_cmd->add_flag("--force", force, "Simulate even from an infeasible state");

  auto* ltl_cmd = app.add_subcommand("ltl", "FSA, plans and compiled cascade of an scLTL task");
  add_common(ltl_cmd, true);
  ltl_cmd->add_flag("--no-solve", no_solve, "Skip solving the selected plan");

  auto* plot_cmd = app.add_subcommand("plotdata", "Contour or trajectory CSV for plotting");
  add_common(plot_cmd, false);
  plot_cmd->add_option("--artifact", artifact, "Solved cascade directory");
  plot_cmd->add_option("--trajectory", trajectory, "Trajectory CSV to project instead of contours");
  plot_cmd->add_option("--leg", leg, "1-based leg whose stage field is sliced");
  plot_cmd->add_option("--axes", axes, "Two free axes, comma separated")->delimiter(',');
  plot_cmd->add_option("--point", point, "Full state fixing the other axes")->delimiter(',');
  plot_cmd->add_option("--t", t_plot, "Slice time");
  plot_cmd->add_option("--level", level, "Contour level");
  plot_cmd->add_option("--file", out_file, "Output CSV (stdout when omitted)");

  auto* case_cmd = app.add_subcommand("casestudy", "Full pipeline for a built-in case study");
  add_common(case_cmd, false);
  case_cmd->add_option("name", study, "si, di, spacecraft or unicycle")->required();
  case_cmd->add_flag("--save-fields", save_fields, "Also write the value fields");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  auto logger = spdlog::stderr_color_mt("hjmra");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(c.log_level));
  spdlog::set_pattern("[%l] %v");

  try {
    if (*solve_cmd) return cmd_solve(c);
    if (*check_cmd) return cmd_check(c, artifact, x0, t);
    if (*sim_cmd) return cmd_simulate(c, artifact, x0, force);
    if (*ltl_cmd) return cmd_ltl(c, !no_solve);
    if (*plot_cmd) return cmd_plotdata(artifact, trajectory, leg, axes, point, t_plot, level, out_file);
    if (*case_cmd) return cmd_casestudy(c, study, save_fields);
  } catch (const ExitError& e) {
    spdlog::error("{}", e.what());
    return e.code;
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfigError;
  } catch (const SolverError& e) {
    spdlog::error("solver failure: {}", e.what());
    return kSolverFailure;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kInternal;
  }
  return kInternal;
}
