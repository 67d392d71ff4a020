#include "hjmra/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hjmra {

namespace {

ltl::Letter letter_of(const std::vector<std::string>& ap, std::initializer_list<const char*> names) {
  ltl::Letter l = 0;
  for (const char* n : names) {
    for (std::size_t a = 0; a < ap.size(); ++a) {
      if (ap[a] == n) l |= 1u << a;
    }
  }
  return l;
}

ltl::Plan plan_from_letters(const ltl::Fsa& fsa, const std::vector<ltl::Letter>& letters) {
  ltl::Plan plan{fsa.initial};
  for (auto l : letters) {
    const int s = fsa.next(plan.back(), l);
    if (s < 0) throw std::invalid_argument("plan letter leads to an undefined transition");
    if (s != plan.back()) plan.push_back(s);
  }
  return plan;
}

}  // namespace

void apply_plan(Scenario& sc) {
  const auto [fsa, plan] = scenario_plan(sc);
  auto regions = ltl::plan_regions(fsa, plan, sc.ltl->labeling);
  sc.task.targets = std::move(regions.targets);
  sc.task.safes = std::move(regions.safes);
  sc.task.unions = std::move(regions.unions);
}

Scenario scenario_single_integrator(int count) {
  Scenario sc;
  sc.name = "si";
  sc.sys = single_integrator(2, 1.0);
  sc.grid = Grid({{-12.0, 12.0, count, false}, {-12.0, 12.0, count, false}});
  sc.x0 = {-3.5, -1.5};
  sc.cascade.output_dt = 0.1;
  sc.cascade.order = 2;

  LtlSetup ltl;
  ltl.formula = "(e U a & e U b) | (e U c & e U d)";
  ltl.labeling.ap = {"a", "b", "c", "d", "e"};
  ltl.labeling.regions = {ball(2, {-6.0, 0.0}, 2.0), ball(2, {6.0, 0.0}, 2.0), ball(2, {0.0, -6.0}, 2.0),
                          ball(2, {0.0, 6.0}, 2.0), ball(2, {0.0, 0.0}, 10.0)};
  const auto& ap = ltl.labeling.ap;
  ltl.plan_letters = {letter_of(ap, {"a", "e"}), letter_of(ap, {"b", "e"})};

  sc.task.t0 = 0.0;
  sc.task.t1 = 10.0;
  sc.ltl = std::move(ltl);
  apply_plan(sc);
  return sc;
}

Scenario scenario_double_integrator(int pos_count, int vel_count) {
  Scenario sc;
  sc.name = "di";
  sc.sys = double_integrator();
  // State (x, vx, y, vy).
  sc.grid = Grid({{-10.5, 10.5, pos_count, false},
                  {-3.25, 3.25, vel_count, false},
                  {-10.5, 10.5, pos_count, false},
                  {-3.25, 3.25, vel_count, false}});
  sc.x0 = {-7.5, 0.0, -2.0, 0.0};
  sc.cascade.output_dt = 0.5;
  sc.cascade.order = 2;

  const PiecewiseLinear xhat({{0.0, 0.0}, {5.0, 5.0}, {10.0, 0.0}}, 10.0);
  const PiecewiseLinear yhat({{-5.0, 7.5}, {5.0, -7.5}, {15.0, 7.5}}, 20.0);
  const ImplicitSet r1 = translate(ball(4, {-7.5, -6.0}, 1.3, {0, 2}), MotionProfile{{0}, {xhat}});
  const ImplicitSet r2 = translate(ball(4, {2.5, 6.0}, 1.3, {0, 2}), MotionProfile{{0}, {xhat}});
  const ImplicitSet obstacle = translate(box(4, {-1.0, -2.5}, {1.0, 2.5}, {0, 2}), MotionProfile{{2}, {yhat}});
  const ImplicitSet workspace = slab_box(4, {-10.0, -3.0, -10.0, -3.0}, {10.0, 3.0, 10.0, 3.0});
  const ImplicitSet safe = set_difference(workspace, obstacle);
  sc.task.t0 = 0.0;
  sc.task.t1 = 20.0;
  sc.task.targets = {r1, r2};
  sc.task.safes = {safe, safe};
  return sc;
}

Scenario scenario_spacecraft(int pos_count, int vel_count) {
  Scenario sc;
  sc.name = "spacecraft";
  sc.sys = spacecraft_rendezvous();
  // State (x, y, vx, vy).
  sc.grid = Grid({{-52.0, 2.0, pos_count, false},
                  {-52.0, 2.0, pos_count, false},
                  {-0.5, 3.5, vel_count, false},
                  {-0.5, 3.5, vel_count, false}});
  sc.x0 = {-47.0, -44.0, 1.35, 1.8};
  sc.cascade.output_dt = 1.0;
  sc.cascade.order = 2;
  const ImplicitSet safe = slab_box(4, {-50.0, -50.0, 0.0, 0.0}, {0.0, 0.0, 3.0, 3.0});
  const ImplicitSet r1 = slab_box(4, {-40.0, -15.0}, {-20.0, 0.0}, {0, 1});
  const ImplicitSet r2 = slab_box(4, {-5.0, -5.0, 0.0, 0.0}, {0.0, 0.0, 2.0, 2.0});
  sc.task.t0 = 0.0;
  sc.task.t1 = 60.0;
  sc.task.targets = {r1, r2};
  sc.task.safes = {safe, safe};
  sc.sim.disturbance = DisturbancePolicy::worst_case();
  return sc;
}

ReferenceFn unicycle_reference(std::vector<std::vector<double>> centers, ImplicitSet obstacles, double k_v,
                               double k_theta) {
  return [centers = std::move(centers), obstacles = std::move(obstacles), k_v, k_theta](
             std::span<const double> x, double t, int target_index) {
    const int k = std::clamp(target_index, 1, static_cast<int>(centers.size())) - 1;
    const double d_o = std::max(0.0, -obstacles.eval(x, t));
    const double heading = std::atan2(centers[k][1] - x[1], centers[k][0] - x[0]);
    const double err = std::remainder(heading - x[2], 2.0 * std::numbers::pi);
    return std::vector<double>{k_v * d_o, k_theta * err};
  };
}

Scenario scenario_unicycle(double shift, bool relaxed, int pos_count, int theta_count) {
  Scenario sc;
  sc.name = "unicycle";
  sc.sys = unicycle(3.0, 0.3);
  sc.grid = Grid({{-2.0, 52.0, pos_count, false},
                  {-2.0, 52.0, pos_count, false},
                  {0.0, 2.0 * std::numbers::pi, theta_count, true}});
  sc.x0 = {45.0, 25.0, 1.5 * std::numbers::pi};
  sc.cascade.output_dt = 1.0;
  sc.time_shift = shift;

  const ImplicitSet r1 = ball(3, {20.0, 40.0}, 5.0, {0, 1});
  const ImplicitSet r2 = ball(3, {25.0, 10.0}, 5.0, {0, 1});
  const ImplicitSet r3 = ball(3, {43.0, 10.0}, 5.0, {0, 1});
  const ImplicitSet g1 = box(3, {10.0, 20.0}, {23.0, 30.0}, {0, 1});
  const ImplicitSet g2 = box(3, {27.0, 20.0}, {40.0, 30.0}, {0, 1});
  const ImplicitSet obstacles = set_union(g1, g2);
  const ImplicitSet workspace = slab_box(3, {0.0, 0.0}, {50.0, 50.0}, {0, 1});
  const ImplicitSet safe = set_difference(workspace, obstacles);
  sc.task.t0 = 0.0;
  sc.task.t1 = 60.0;
  sc.task.targets = {r3, r2, r1};
  sc.task.safes = {safe, safe, safe};

  sc.control.mode = relaxed ? ControlLawConfig::Mode::relaxed : ControlLawConfig::Mode::strict;
  sc.control.beta = 1.2;
  sc.control.gain = 1.0;
  sc.control.Q = Eigen::Vector2d(1.0, 10.0).asDiagonal();
  sc.control.reference = unicycle_reference({{43.0, 10.0}, {25.0, 10.0}, {20.0, 40.0}}, obstacles);
  return sc;
}

Scenario scenario_reach_1d(double dx) {
  Scenario sc;
  sc.name = "reach1d";
  sc.sys = single_integrator(1, 1.0);
  const int count = static_cast<int>(std::lround(8.0 / dx)) + 1;
  sc.grid = Grid({{-4.0, 4.0, count, false}});
  sc.x0 = {3.0};
  sc.cascade.output_dt = 0.1;
  sc.task.t0 = 0.0;
  sc.task.t1 = 2.0;
  sc.task.targets = {box(1, {-1.0}, {1.0})};
  sc.task.safes = {constant(1, 100.0)};
  return sc;
}

Scenario scenario_cascade_1d(double dx) {
  Scenario sc;
  sc.name = "cascade1d";
  sc.sys = single_integrator(1, 1.0);
  const int count = static_cast<int>(std::lround(18.0 / dx)) + 1;
  sc.grid = Grid({{-5.0, 13.0, count, false}});
  sc.x0 = {0.0};
  sc.cascade.output_dt = 0.1;
  sc.task.t0 = 0.0;
  sc.task.t1 = 10.0;
  sc.task.targets = {box(1, {4.0}, {5.0}), box(1, {-1.0}, {0.0})};
  sc.task.safes = {constant(1, 100.0), constant(1, 100.0)};
  return sc;
}

Scenario scenario_by_name(const std::string& name) {
  if (name == "si") return scenario_single_integrator();
  if (name == "di") return scenario_double_integrator();
  if (name == "spacecraft") return scenario_spacecraft();
  if (name == "unicycle") return scenario_unicycle();
  if (name == "reach1d") return scenario_reach_1d();
  if (name == "cascade1d") return scenario_cascade_1d();
  throw std::invalid_argument("unknown scenario '" + name + "' (expected si, di, spacecraft, unicycle, reach1d, cascade1d)");
}

std::pair<ltl::Fsa, ltl::Plan> scenario_plan(const Scenario& sc) {
  if (!sc.ltl) throw std::invalid_argument("scenario '" + sc.name + "' has no scLTL task");
  const auto& ap = sc.ltl->labeling.ap;
  auto fsa = ltl::to_fsa(ltl::parse(sc.ltl->formula, ap), ap);
  if (!sc.ltl->plan_letters.empty()) {
    auto plan = plan_from_letters(fsa, sc.ltl->plan_letters);
    return {std::move(fsa), std::move(plan)};
  }
  const auto plans = ltl::enumerate_plans(fsa);
  if (plans.empty()) throw std::invalid_argument("formula has no plan reaching acceptance");
  if (sc.ltl->plan_index < 0 || sc.ltl->plan_index >= static_cast<int>(plans.size())) {
    throw std::invalid_argument("plan index " + std::to_string(sc.ltl->plan_index) + " out of range (" +
                                std::to_string(plans.size()) + " plans)");
  }
  auto plan = plans[sc.ltl->plan_index];
  return {std::move(fsa), std::move(plan)};
}

CascadeResult solve_scenario(const Scenario& sc) {
  if (sc.ltl) {
    const auto [fsa, plan] = scenario_plan(sc);
    auto compiled = ltl::compile_plan(fsa, plan, sc.ltl->labeling, sc.sys, sc.grid, sc.task.t0, sc.task.t1, sc.cascade);
    if (compiled.trivial) throw std::runtime_error("scenario plan is trivially satisfied");
    return std::move(compiled.cascade);
  }
  return solve_cascade(sc.task, sc.sys, sc.grid, sc.cascade);
}

RunReport run_scenario(const Scenario& sc, std::shared_ptr<const CascadeResult> cascade,
                       std::optional<double> time_shift, std::optional<DisturbancePolicy> disturbance) {
  const auto start = std::chrono::steady_clock::now();
  const double shift = time_shift.value_or(sc.time_shift);
  SimConfig cfg = sc.sim;
  if (disturbance) cfg.disturbance = *disturbance;
  SynthesisPolicy policy(cascade, sc.sys, sc.control, shift);
  RunReport rep;
  rep.traj = simulate(policy, sc.x0, sc.task.t0, cfg);
  const bool unions = sc.ltl.has_value() || sc.cascade.enlarge_safe;
  rep.check = check_mra(rep.traj, sc.task, unions);
  if (sc.ltl) {
    const auto [fsa, plan] = scenario_plan(sc);
    const auto word = trajectory_word(rep.traj, sc.ltl->labeling);
    rep.word_length = word.size();
    rep.word_accepted = fsa.accepts(word);
  }
  // Gradient bound of the active field along the run.
  for (std::size_t k : rep.traj.control_samples) {
    const int leg = rep.traj.stages[k];
    if (leg < 1 || leg > cascade->size()) continue;
    const auto g = gradient(*cascade->for_target(leg).value, rep.traj.states[k], rep.traj.times[k] + shift);
    double norm = 0.0;
    for (double v : g.dx) norm += v * v;
    rep.lipschitz = std::max(rep.lipschitz, std::sqrt(norm));
  }
  rep.eps_num = numerical_tolerance(rep.lipschitz, cascade->grid(), cfg.dt_ctrl, rep.traj.max_speed);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace hjmra
