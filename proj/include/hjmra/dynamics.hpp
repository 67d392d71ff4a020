#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjmra/grid.hpp"

namespace hjmra {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Compact input set: an axis-aligned box or a Euclidean ball centred at 0.
/// An optional positive time scale multiplies the bounds (box) or radius (ball).
class BoundSet {
 public:
  enum class Kind { box, ball };

  BoundSet() = default;
  static BoundSet make_box(std::vector<double> lo, std::vector<double> hi);
  static BoundSet make_ball(int dim, double radius);
  /// Zero-dimensional set (no input channel).
  static BoundSet empty() { return {}; }

  BoundSet with_time_scale(std::function<double(double)> scale) const;

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  double radius() const { return radius_; }
  bool time_varying() const { return static_cast<bool>(scale_); }
  double scale(double t) const { return scale_ ? scale_(t) : 1.0; }

  /// max over the set of c . v
  double support(std::span<const double> c, double t) const;
  /// A maximizer of c . v. Box ties pick 0 when 0 is in range, else lo.
  void maximizer(std::span<const double> c, double t, std::span<double> out) const;
  /// Largest |v_j| over the set, per axis.
  double axis_extent(int j, double t) const;
  bool contains(std::span<const double> v, double t, double tol = 1e-12) const;

 private:
  Kind kind_ = Kind::box;
  int dim_ = 0;
  std::vector<double> lo_;
  std::vector<double> hi_;
  double radius_ = 0.0;
  std::function<double(double)> scale_;
};

/// Control-affine disturbed dynamics  xdot = f(x,t) + g(x,t) u + p(x,t) d.
///
/// g and p are written row-major (n x m, n x l) into caller buffers.
struct SystemModel {
  using VectorFn = std::function<void(std::span<const double> x, double t, std::span<double> out)>;

  std::string name;
  int n = 0;
  int m = 0;
  int l = 0;
  VectorFn f;
  VectorFn g;
  VectorFn p;
  BoundSet U;
  BoundSet D;
  /// f, g, p and the bound sets do not depend on t.
  bool time_invariant = true;
  /// Declared Lipschitz constant of the vector field in x.
  double lipschitz = 1.0;

  void validate() const;
  /// xdot for given u and d.
  void derivative(std::span<const double> x, std::span<const double> u,
                  std::span<const double> d, double t, std::span<double> out) const;
};

/// f, g, p evaluated at one (x, t).
struct ModelTerms {
  std::vector<double> f;
  std::vector<double> g;
  std::vector<double> p;

  void evaluate(const SystemModel& sys, std::span<const double> x, double t);
};

/// grad.f + max_u grad.g u + min_d grad.p d
double hamiltonian(const SystemModel& sys, std::span<const double> x, double t,
                   std::span<const double> grad);
double hamiltonian(const SystemModel& sys, const ModelTerms& terms, double t,
                   std::span<const double> grad);

std::vector<double> argmax_control(const SystemModel& sys, std::span<const double> x, double t,
                                   std::span<const double> grad);
std::vector<double> argmin_disturbance(const SystemModel& sys, std::span<const double> x,
                                       double t, std::span<const double> grad);

/// min_d grad.p d, the worst-case disturbance contribution.
double worst_disturbance_term(const SystemModel& sys, std::span<const double> x, double t,
                              std::span<const double> grad);

/// Per-axis bound on |f_i + (g u)_i + (p d)_i| over grid nodes and the input sets.
std::vector<double> dissipation_bounds(const SystemModel& sys, const Grid& grid, double t);

// Built-in systems.

/// xdot = u, ||u|| <= speed.
SystemModel single_integrator(int dim = 2, double speed = 1.0);

/// Double integrator with state (x, vx, y, vy) and acceleration bound
/// u_m(t) = 0.5 + 0.05 t for t < 10, 1 afterwards, folded into g.
SystemModel double_integrator();
double double_integrator_bound(double t);

/// Planar relative motion in Hill's frame, state (x, y, vx, vy), thrust box
/// [-10, 10]^2 and a scalar disturbance d in [-0.02, 0.02] on both channels.
struct SpacecraftParams {
  double mu = 3.986e14 * 30.0 * 30.0;
  double r = 42164e3;
  double m_c = 500.0;
  double u_max = 10.0;
  double d_max = 0.02;
  double mean_motion() const;
};
SystemModel spacecraft_rendezvous(const SpacecraftParams& params = {});

/// Kinematic unicycle, state (x, y, theta), input (v, omega) in [0,3] x [-0.3,0.3].
SystemModel unicycle(double v_max = 3.0, double omega_max = 0.3);

}  // namespace hjmra
