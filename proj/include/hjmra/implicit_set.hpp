#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hjmra {

/// Thrown on malformed geometry or incompatible set operands.
class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Periodic piecewise-linear scalar signal of time.
///
/// Knots must be strictly increasing in time. Outside the knot span the
/// signal is extended periodically when `period > 0`, and held constant at
/// the end values otherwise.
class PiecewiseLinear {
 public:
  struct Knot {
    double t;
    double value;
  };

  PiecewiseLinear() = default;
  explicit PiecewiseLinear(double constant);
  PiecewiseLinear(std::vector<Knot> knots, double period);

  double operator()(double t) const;

  const std::vector<Knot>& knots() const { return knots_; }
  double period() const { return period_; }
  bool is_constant() const { return knots_.size() <= 1; }

 private:
  std::vector<Knot> knots_;
  double period_ = 0.0;
};

/// Time-dependent translation applied to a subset of state coordinates.
struct MotionProfile {
  std::vector<int> coords;
  std::vector<PiecewiseLinear> components;

  void offset(double t, std::span<double> out) const;
  bool is_static() const;
};

/// Time-varying level function h(x, t) with the convention h >= 0 inside.
///
/// Values are immutable and cheap to copy; the evaluator is shared.
class ImplicitSet {
 public:
  using Evaluator = std::function<double(std::span<const double>, double)>;

  ImplicitSet() = default;
  ImplicitSet(int dim, Evaluator fn, bool time_invariant = true,
              double lipschitz = 1.0,
              double t_lo = -std::numeric_limits<double>::infinity(),
              double t_hi = std::numeric_limits<double>::infinity());

  double eval(std::span<const double> x, double t) const;
  double operator()(std::span<const double> x, double t) const {
    return eval(x, t);
  }
  bool contains(std::span<const double> x, double t) const {
    return eval(x, t) >= 0.0;
  }

  int dim() const { return dim_; }
  bool valid() const { return static_cast<bool>(fn_); }
  bool time_invariant() const { return time_invariant_; }
  /// Declared Lipschitz bound in x.
  double lipschitz() const { return lipschitz_; }
  double t_lo() const { return t_lo_; }
  double t_hi() const { return t_hi_; }

 private:
  int dim_ = 0;
  std::shared_ptr<const Evaluator> fn_;
  bool time_invariant_ = true;
  double lipschitz_ = 1.0;
  double t_lo_ = -std::numeric_limits<double>::infinity();
  double t_hi_ = std::numeric_limits<double>::infinity();
};

// Primitives. `coords` selects which state coordinates the geometry lives in;
// an empty list means the leading coordinates 0..k-1.

/// Euclidean ball: radius - ||x_c - center||.
ImplicitSet ball(int dim, std::vector<double> center, double radius,
                 std::vector<int> coords = {});

/// Axis-aligned box with exact signed distance (positive inside).
ImplicitSet box(int dim, std::vector<double> lo, std::vector<double> hi,
                std::vector<int> coords = {});

/// Intersection of per-coordinate slabs: min_i min(x_i - lo_i, hi_i - x_i).
/// Equal to the box signed distance inside, Chebyshev-like outside.
ImplicitSet slab_box(int dim, std::vector<double> lo, std::vector<double> hi,
                     std::vector<int> coords = {});

/// Half-space {x : normal . x_c <= offset}, normalized to unit slope.
ImplicitSet halfspace(int dim, std::vector<double> normal, double offset,
                      std::vector<int> coords = {});

/// Whole space (h = value > 0) or empty set (value < 0).
ImplicitSet constant(int dim, double value);

ImplicitSet set_union(const ImplicitSet& a, const ImplicitSet& b);
ImplicitSet set_intersect(const ImplicitSet& a, const ImplicitSet& b);
ImplicitSet set_complement(const ImplicitSet& a);
/// a \ b
ImplicitSet set_difference(const ImplicitSet& a, const ImplicitSet& b);
ImplicitSet set_union(const std::vector<ImplicitSet>& sets);
ImplicitSet set_intersect(const std::vector<ImplicitSet>& sets);
/// Evaluates `a` at x - offset(t) on the profile's coordinates.
ImplicitSet translate(const ImplicitSet& a, MotionProfile motion);

}  // namespace hjmra
