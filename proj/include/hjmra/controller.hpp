#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjmra/cascade.hpp"
#include "hjmra/dynamics.hpp"
#include "hjmra/grid.hpp"

namespace hjmra {

class ControllerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Empty feasible control set. Carries the best achievable a.u against rhs.
class QpInfeasible : public ControllerError {
 public:
  QpInfeasible(const std::string& what, double best, double rhs)
      : ControllerError(what), best_(best), rhs_(rhs) {}
  double best() const { return best_; }
  double rhs() const { return rhs_; }

 private:
  double best_;
  double rhs_;
};

/// Reference control (x, t, active 1-based target index) -> u_ref.
using ReferenceFn = std::function<std::vector<double>(std::span<const double>, double, int)>;

struct ControlLawConfig {
  enum class Mode { strict, relaxed };
  Mode mode = Mode::strict;
  double beta = 0.0;
  /// Class-K function alpha(s) = gain * s.
  double gain = 1.0;
  /// Quadratic weight; empty means identity.
  Eigen::MatrixXd Q;
  ReferenceFn reference;
  /// Throw QpInfeasible instead of applying the max-margin control.
  bool throw_on_infeasible = false;

  void validate(int m) const;
};

/// Linear requirement a . u >= rhs on the control.
struct Halfspace {
  std::vector<double> a;
  double rhs = 0.0;
  double value = 0.0;
  std::vector<double> grad;
  double dbdt = 0.0;
  double p_star = 0.0;
};

/// Builds the feasible-control half-space from the value field at (x, t).
/// Throws ControllerError when x or t leaves the stored domain.
Halfspace feasible_halfspace(const GridField& b, const SystemModel& sys, std::span<const double> x,
                             double t, const ControlLawConfig& cfg = {});

struct QpSolution {
  std::vector<double> u;
  double objective = 0.0;
  /// a . u - rhs (0 when unconstrained).
  double slack = 0.0;
  bool constrained = false;
  bool constraint_active = false;
  /// Box: -1 at lower face, +1 at upper face, 0 free. Ball: single entry, 1 on the sphere.
  std::vector<int> faces;
};

/// min (u - u_ref)' Q (u - u_ref) over U(t), optionally subject to a . u >= rhs.
QpSolution solve_control_qp(const BoundSet& U, double t, const Eigen::MatrixXd& Q,
                            std::span<const double> u_ref, std::span<const double> a, double rhs,
                            bool constrained = true);

struct SwitchEvent {
  double time = 0.0;
  std::vector<double> state;
  /// 1-based leg that was completed.
  int completed_target = 0;
  double target_margin = 0.0;
  /// Value of the next stage at the switch (the completed one for the last leg).
  double incoming_value = 0.0;
};

struct PolicyOutput {
  std::vector<double> u;
  bool switched = false;
  bool done = false;
  /// Active 1-based leg; N + 1 once every leg is complete.
  int target_index = 1;
  double value = 0.0;
  double target_value = 0.0;
  double slack = 0.0;
  bool constrained = false;
  /// The QP was infeasible and the max-margin control was applied.
  bool margin_exception = false;
};

/// Online stage tracking and control selection over a solved cascade.
///
/// With a positive time shift the stored fields are read at t + shift; this
/// is only accepted for time-invariant cascades.
class SynthesisPolicy {
 public:
  SynthesisPolicy(std::shared_ptr<const CascadeResult> cascade, SystemModel sys,
                  ControlLawConfig cfg = {}, double time_shift = 0.0);

  PolicyOutput step(std::span<const double> x, double t);

  int num_targets() const { return cascade_->size(); }
  int current_target() const { return current_; }
  bool done() const { return current_ > num_targets(); }
  const std::vector<SwitchEvent>& switches() const { return switches_; }
  double time_shift() const { return shift_; }
  const SystemModel& system() const { return sys_; }
  const CascadeResult& cascade() const { return *cascade_; }
  const ControlLawConfig& config() const { return cfg_; }

  /// Active stage value and its target function at (x, t).
  double value(std::span<const double> x, double t) const;
  double target_value(std::span<const double> x, double t) const;
  /// Spatial gradient of the active stage (zero once done).
  std::vector<double> value_gradient(std::span<const double> x, double t) const;

  void reset();

 private:
  const GridField& stage_field(int target_index) const;
  double target_value_for(int target_index, std::span<const double> x, double t) const;
  std::vector<double> reference(std::span<const double> x, double t) const;

  std::shared_ptr<const CascadeResult> cascade_;
  SystemModel sys_;
  ControlLawConfig cfg_;
  Eigen::MatrixXd Q_;
  double shift_ = 0.0;
  int current_ = 1;
  std::vector<SwitchEvent> switches_;
};

}  // namespace hjmra
