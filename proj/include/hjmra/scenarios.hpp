#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hjmra/cascade.hpp"
#include "hjmra/controller.hpp"
#include "hjmra/dynamics.hpp"
#include "hjmra/grid.hpp"
#include "hjmra/scltl.hpp"
#include "hjmra/sim.hpp"

namespace hjmra {

/// scLTL front end of a scenario: formula, regions and the chosen plan.
struct LtlSetup {
  std::string formula;
  ltl::Labeling labeling;
  /// Letters that drive the initial state along the chosen plan. When empty,
  /// plan_index selects from enumerate_plans (shortest first).
  std::vector<ltl::Letter> plan_letters;
  int plan_index = 0;
};

/// Everything needed to solve and run one case study.
struct Scenario {
  std::string name;
  SystemModel sys;
  Grid grid;
  MraTask task;
  std::vector<double> x0;
  CascadeOptions cascade;
  ControlLawConfig control;
  SimConfig sim;
  double time_shift = 0.0;
  std::optional<LtlSetup> ltl;
};

/// Two-target single-integrator task with regions R1..R5 on a count^2 grid.
Scenario scenario_single_integrator(int count = 161);

/// Moving targets and obstacle, time-varying input bound.
Scenario scenario_double_integrator(int pos_count = 31, int vel_count = 13);

/// Hill-frame rendezvous with thrust disturbance.
Scenario scenario_spacecraft(int pos_count = 41, int vel_count = 17);

/// Three ordered targets around two rectangles. `shift` reads the value
/// fields at t + shift; `relaxed` uses the beta = 1.2 control set.
Scenario scenario_unicycle(double shift = 0.0, bool relaxed = true, int pos_count = 109, int theta_count = 36);

/// 1-D reach-avoid on xdot = u, |u| <= 1, target [-1, 1], horizon 2.
Scenario scenario_reach_1d(double dx = 0.05);

/// 1-D two-target cascade: [4, 5] then [-1, 0] within 10 s.
Scenario scenario_cascade_1d(double dx = 0.05);

/// Scenario by name: si, di, spacecraft, unicycle, reach1d, cascade1d.
Scenario scenario_by_name(const std::string& name);

/// The scenario's FSA and selected plan. Throws std::invalid_argument without an scLTL setup.
std::pair<ltl::Fsa, ltl::Plan> scenario_plan(const Scenario& sc);

/// Fills the task's targets, safes and unions from the scLTL plan.
void apply_plan(Scenario& sc);

/// Solves the scenario, through the scLTL plan when it has one.
CascadeResult solve_scenario(const Scenario& sc);

/// One closed-loop run with its checks.
struct RunReport {
  Trajectory traj;
  MraCheck check;
  /// Trajectory word accepted by the FSA (scLTL scenarios only).
  std::optional<bool> word_accepted;
  std::size_t word_length = 0;
  /// Largest gradient norm of the active field at the control samples.
  double lipschitz = 0.0;
  /// Numerical tolerance 2 (L/2 |dx| + dt_ctrl L v_max) with that bound.
  double eps_num = 0.0;
  double seconds = 0.0;
};

/// Simulates the scenario's policy over a solved cascade. `time_shift` and
/// `disturbance` override the scenario's values when given.
RunReport run_scenario(const Scenario& sc, std::shared_ptr<const CascadeResult> cascade,
                       std::optional<double> time_shift = std::nullopt,
                       std::optional<DisturbancePolicy> disturbance = std::nullopt);

/// Unicycle reference: v = k_v d_o(x), omega = k_theta * heading error to the active target.
ReferenceFn unicycle_reference(std::vector<std::vector<double>> target_centers, ImplicitSet obstacles,
                               double k_v = 0.5, double k_theta = 1.0);

}  // namespace hjmra
