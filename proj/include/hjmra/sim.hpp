#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hjmra/cascade.hpp"
#include "hjmra/controller.hpp"
#include "hjmra/dynamics.hpp"
#include "hjmra/grid.hpp"
#include "hjmra/scltl.hpp"

namespace hjmra {

struct DisturbancePolicy {
  enum class Kind { zero, worst_case, uniform_random, scripted };
  struct Row {
    double t = 0.0;
    std::vector<double> d;
  };

  Kind kind = Kind::zero;
  std::uint64_t seed = 0;
  /// Held from each row's time until the next row.
  std::vector<Row> script;

  static DisturbancePolicy zero() { return {}; }
  static DisturbancePolicy worst_case() { return {Kind::worst_case, 0, {}}; }
  static DisturbancePolicy uniform_random(std::uint64_t seed) { return {Kind::uniform_random, seed, {}}; }
  static DisturbancePolicy scripted(std::vector<Row> rows) { return {Kind::scripted, 0, std::move(rows)}; }
};

struct SimConfig {
  enum class Integrator { rk4, euler };
  double dt_sim = 0.01;
  double dt_ctrl = 0.1;
  Integrator integrator = Integrator::rk4;
  DisturbancePolicy disturbance;
  /// Stop once the policy reports every leg complete.
  bool stop_when_done = true;

  void validate() const;
  int substeps() const;
};

struct Violation {
  double time = 0.0;
  std::string reason;
};

/// Sampled closed-loop run. Per-sample vectors share the times index.
struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> controls;
  std::vector<std::vector<double>> disturbances;
  std::vector<int> stages;
  std::vector<double> values;
  std::vector<double> target_values;
  std::vector<double> slacks;
  /// Sample indices where the control was recomputed.
  std::vector<std::size_t> control_samples;
  std::vector<SwitchEvent> switches;
  std::vector<Violation> margin_exceptions;
  std::optional<Violation> violation;
  bool completed = false;
  double max_speed = 0.0;

  std::size_t size() const { return times.size(); }
};

using Controller = std::function<PolicyOutput(std::span<const double> x, double t)>;
using GradientFn = std::function<std::vector<double>(std::span<const double> x, double t)>;

/// Closed loop with zero-order-hold control. `box` (optional) truncates the run
/// when the state leaves it; `gradient` feeds the worst-case disturbance.
Trajectory simulate(const SystemModel& sys, const Controller& control, const GradientFn& gradient,
                    std::span<const double> x0, double t0, double t1, const SimConfig& cfg,
                    const Grid* box = nullptr);

/// Runs a synthesis policy over its cascade grid up to t1 - time_shift.
Trajectory simulate(SynthesisPolicy& policy, std::span<const double> x0, double t0,
                    const SimConfig& cfg);

struct MraCheck {
  bool satisfied = false;
  /// Witness times tau_1..tau_N (empty when unsatisfied).
  std::vector<double> taus;
  /// Completed legs on the best chain.
  int legs_done = 0;
  std::optional<std::size_t> violation_index;
  std::string reason;
};

/// Witness search over samples. With `safe_includes_target` each G_i is read
/// as G_i united with T_i.
MraCheck check_mra(const Trajectory& traj, const MraTask& task, bool safe_includes_target = false);

/// Label sequence with one-sample spikes removed and repeats collapsed.
ltl::Word trajectory_word(const Trajectory& traj, const ltl::Labeling& lab);

/// Largest node gradient norm over every slice (central differences).
double max_gradient_norm(const GridField& field);

/// 2 (L/2 |dx| + dt_ctrl L v_max): interpolation plus hold error.
double numerical_tolerance(double lipschitz, const Grid& grid, double dt_ctrl, double max_speed);

void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace hjmra
