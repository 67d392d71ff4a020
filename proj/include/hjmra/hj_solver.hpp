#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjmra/dynamics.hpp"
#include "hjmra/grid.hpp"
#include "hjmra/implicit_set.hpp"

namespace hjmra {

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double time, int stage = -1)
      : std::runtime_error(what), time_(time), stage_(stage) {}
  double time() const { return time_; }
  int stage() const { return stage_; }

 private:
  double time_;
  int stage_;
};

/// Produces a full node slice of a level function at a given time.
class SliceSource {
 public:
  using Fill = std::function<void(double t, std::span<double> out)>;

  SliceSource() = default;
  SliceSource(Fill fill, bool time_invariant) : fill_(std::move(fill)), time_invariant_(time_invariant) {}

  static SliceSource from_set(const ImplicitSet& set, const Grid& grid);
  /// Nodewise linear time interpolation of a stored field on the same grid.
  static SliceSource from_field(std::shared_ptr<const GridField> field);
  static SliceSource constant(double value);

  void fill(double t, std::span<double> out) const { fill_(t, out); }
  bool time_invariant() const { return time_invariant_; }
  bool valid() const { return static_cast<bool>(fill_); }

 private:
  Fill fill_;
  bool time_invariant_ = true;
};

SliceSource slice_min(SliceSource a, SliceSource b);
SliceSource slice_max(SliceSource a, SliceSource b);

struct SolveProgress {
  double t = 0.0;
  std::size_t step = 0;
  double dt = 0.0;
};

struct SolveStats {
  std::size_t steps = 0;
  double dt_cfl = 0.0;
  std::vector<double> alpha;
  double seconds = 0.0;
};

struct RaProblem {
  SystemModel sys;
  Grid grid;
  SliceSource target;
  SliceSource safe;
  double t0 = 0.0;
  double t1 = 1.0;
  double cfl = 0.8;
  double output_dt = 0.1;
  /// 1: first-order upwind differences, forward Euler. 2: ENO2 with Heun steps.
  int order = 1;
  int threads = 1;
  std::function<void(const SolveProgress&)> progress;

  void validate() const;
};

/// Output stamps t0, t0 + dt, ..., t1 (last gap may be shorter).
std::vector<double> output_stamps(double t0, double t1, double output_dt);

/// Backward Lax-Friedrichs solve of the reach-avoid variational inequality.
GridField solve_ra(const RaProblem& problem, SolveStats* stats = nullptr);

/// Nodes with interpolated value >= 0 at time t.
std::vector<std::uint8_t> feasible_set(const GridField& V, double t);

/// Worker count: explicit value if positive, else HJMRA_THREADS, else 1.
int resolve_threads(int requested);

/// Runs fn(begin, end) over [0, count) split across `threads` workers.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace hjmra
