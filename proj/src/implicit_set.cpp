#include "hjmra/implicit_set.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <utility>

namespace hjmra {

namespace {

constexpr int kMaxDim = 16;

std::vector<int> resolve_coords(int dim, std::vector<int> coords, std::size_t k,
                                const char* what) {
  if (dim <= 0 || dim > kMaxDim) {
    throw GeometryError(std::string(what) + ": state dimension must be in [1, 16]");
  }
  if (coords.empty()) {
    coords.resize(k);
    std::iota(coords.begin(), coords.end(), 0);
  }
  if (coords.size() != k) {
    throw GeometryError(std::string(what) + ": coordinate list does not match geometry size");
  }
  for (int c : coords) {
    if (c < 0 || c >= dim) {
      throw GeometryError(std::string(what) + ": coordinate index out of range");
    }
  }
  return coords;
}

void require_same_dim(const ImplicitSet& a, const ImplicitSet& b, const char* what) {
  if (!a.valid() || !b.valid()) {
    throw GeometryError(std::string(what) + ": operand is empty");
  }
  if (a.dim() != b.dim()) {
    throw GeometryError(std::string(what) + ": dimension mismatch (" +
                        std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// PiecewiseLinear

PiecewiseLinear::PiecewiseLinear(double c) : knots_{{0.0, c}} {}

PiecewiseLinear::PiecewiseLinear(std::vector<Knot> knots, double period)
    : knots_(std::move(knots)), period_(period) {
  if (knots_.empty()) throw GeometryError("piecewise-linear signal needs at least one knot");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i].t > knots_[i - 1].t)) {
      throw GeometryError("piecewise-linear knots must be strictly increasing in time");
    }
  }
  if (period_ < 0.0) throw GeometryError("period must be non-negative");
  if (period_ > 0.0 && knots_.back().t - knots_.front().t > period_ + 1e-12) {
    throw GeometryError("knot span exceeds the period");
  }
}

double PiecewiseLinear::operator()(double t) const {
  if (knots_.empty()) return 0.0;
  if (knots_.size() == 1) return knots_.front().value;
  const double t0 = knots_.front().t;
  const double t_end = knots_.back().t;
  if (period_ > 0.0) {
    // Wrap into [t0, t0 + period).
    double s = std::fmod(t - t0, period_);
    if (s < 0.0) s += period_;
    t = t0 + s;
    if (t > t_end) {
      // Between the last knot and the start of the next period.
      const double span = t0 + period_ - t_end;
      const double w = (t - t_end) / span;
      return (1.0 - w) * knots_.back().value + w * knots_.front().value;
    }
  } else {
    if (t <= t0) return knots_.front().value;
    if (t >= t_end) return knots_.back().value;
  }
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                             [](double v, const Knot& k) { return v < k.t; });
  if (it == knots_.begin()) return knots_.front().value;
  if (it == knots_.end()) return knots_.back().value;
  const Knot& a = *(it - 1);
  const Knot& b = *it;
  if (t == a.t) return a.value;
  const double w = (t - a.t) / (b.t - a.t);
  return (1.0 - w) * a.value + w * b.value;
}

void MotionProfile::offset(double t, std::span<double> out) const {
  for (std::size_t i = 0; i < components.size(); ++i) out[i] = components[i](t);
}

bool MotionProfile::is_static() const {
  return std::all_of(components.begin(), components.end(),
                     [](const PiecewiseLinear& p) { return p.is_constant(); });
}

// ---------------------------------------------------------------------------
// ImplicitSet

ImplicitSet::ImplicitSet(int dim, Evaluator fn, bool time_invariant, double lipschitz,
                         double t_lo, double t_hi)
    : dim_(dim),
      fn_(std::make_shared<const Evaluator>(std::move(fn))),
      time_invariant_(time_invariant),
      lipschitz_(lipschitz),
      t_lo_(t_lo),
      t_hi_(t_hi) {
  if (dim_ <= 0) throw GeometryError("implicit set dimension must be positive");
}

double ImplicitSet::eval(std::span<const double> x, double t) const {
  return (*fn_)(x, t);
}

ImplicitSet ball(int dim, std::vector<double> center, double radius, std::vector<int> coords) {
  if (!(radius > 0.0)) throw GeometryError("ball: radius must be positive");
  if (center.empty()) throw GeometryError("ball: empty center");
  coords = resolve_coords(dim, std::move(coords), center.size(), "ball");
  return ImplicitSet(dim, [center = std::move(center), coords = std::move(coords), radius](
                              std::span<const double> x, double) {
    double s = 0.0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const double d = x[coords[i]] - center[i];
      s += d * d;
    }
    return radius - std::sqrt(s);
  });
}

namespace {
void check_box(const std::vector<double>& lo, const std::vector<double>& hi, const char* what) {
  if (lo.empty() || lo.size() != hi.size()) {
    throw GeometryError(std::string(what) + ": lo/hi size mismatch");
  }
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i])) throw GeometryError(std::string(what) + ": lower bound must be below upper bound");
  }
}
}  // namespace

ImplicitSet box(int dim, std::vector<double> lo, std::vector<double> hi, std::vector<int> coords) {
  check_box(lo, hi, "box");
  coords = resolve_coords(dim, std::move(coords), lo.size(), "box");
  return ImplicitSet(dim, [lo = std::move(lo), hi = std::move(hi), coords = std::move(coords)](
                              std::span<const double> x, double) {
    double inside = std::numeric_limits<double>::infinity();
    double outside_sq = 0.0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const double v = x[coords[i]];
      const double d = std::min(v - lo[i], hi[i] - v);
      inside = std::min(inside, d);
      if (d < 0.0) outside_sq += d * d;
    }
    return inside >= 0.0 ? inside : -std::sqrt(outside_sq);
  });
}

ImplicitSet slab_box(int dim, std::vector<double> lo, std::vector<double> hi,
                     std::vector<int> coords) {
  check_box(lo, hi, "slab_box");
  coords = resolve_coords(dim, std::move(coords), lo.size(), "slab_box");
  return ImplicitSet(dim, [lo = std::move(lo), hi = std::move(hi), coords = std::move(coords)](
                              std::span<const double> x, double) {
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const double v = x[coords[i]];
      h = std::min(h, std::min(v - lo[i], hi[i] - v));
    }
    return h;
  });
}

ImplicitSet halfspace(int dim, std::vector<double> normal, double offset, std::vector<int> coords) {
  double norm = 0.0;
  for (double v : normal) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw GeometryError("halfspace: normal must be non-zero");
  coords = resolve_coords(dim, std::move(coords), normal.size(), "halfspace");
  for (double& v : normal) v /= norm;
  offset /= norm;
  return ImplicitSet(dim, [normal = std::move(normal), coords = std::move(coords), offset](
                              std::span<const double> x, double) {
    double s = 0.0;
    for (std::size_t i = 0; i < coords.size(); ++i) s += normal[i] * x[coords[i]];
    return offset - s;
  });
}

ImplicitSet constant(int dim, double value) {
  return ImplicitSet(dim, [value](std::span<const double>, double) { return value; }, true, 0.0);
}

ImplicitSet set_union(const ImplicitSet& a, const ImplicitSet& b) {
  require_same_dim(a, b, "union");
  return ImplicitSet(
      a.dim(), [a, b](std::span<const double> x, double t) { return std::max(a.eval(x, t), b.eval(x, t)); },
      a.time_invariant() && b.time_invariant(), std::max(a.lipschitz(), b.lipschitz()),
      std::max(a.t_lo(), b.t_lo()), std::min(a.t_hi(), b.t_hi()));
}

ImplicitSet set_intersect(const ImplicitSet& a, const ImplicitSet& b) {
  require_same_dim(a, b, "intersect");
  return ImplicitSet(
      a.dim(), [a, b](std::span<const double> x, double t) { return std::min(a.eval(x, t), b.eval(x, t)); },
      a.time_invariant() && b.time_invariant(), std::max(a.lipschitz(), b.lipschitz()),
      std::max(a.t_lo(), b.t_lo()), std::min(a.t_hi(), b.t_hi()));
}

ImplicitSet set_complement(const ImplicitSet& a) {
  if (!a.valid()) throw GeometryError("complement: operand is empty");
  return ImplicitSet(
      a.dim(), [a](std::span<const double> x, double t) { return -a.eval(x, t); }, a.time_invariant(),
      a.lipschitz(), a.t_lo(), a.t_hi());
}

ImplicitSet set_difference(const ImplicitSet& a, const ImplicitSet& b) {
  return set_intersect(a, set_complement(b));
}

ImplicitSet set_union(const std::vector<ImplicitSet>& sets) {
  if (sets.empty()) throw GeometryError("union: no operands");
  ImplicitSet acc = sets.front();
  for (std::size_t i = 1; i < sets.size(); ++i) acc = set_union(acc, sets[i]);
  return acc;
}

ImplicitSet set_intersect(const std::vector<ImplicitSet>& sets) {
  if (sets.empty()) throw GeometryError("intersect: no operands");
  ImplicitSet acc = sets.front();
  for (std::size_t i = 1; i < sets.size(); ++i) acc = set_intersect(acc, sets[i]);
  return acc;
}

ImplicitSet translate(const ImplicitSet& a, MotionProfile motion) {
  if (!a.valid()) throw GeometryError("translate: operand is empty");
  if (motion.coords.size() != motion.components.size()) {
    throw GeometryError("translate: motion coords/components size mismatch");
  }
  motion.coords = resolve_coords(a.dim(), std::move(motion.coords), motion.components.size(), "translate");
  const bool invariant = a.time_invariant() && motion.is_static();
  return ImplicitSet(
      a.dim(),
      [a, motion = std::move(motion)](std::span<const double> x, double t) {
        std::array<double, kMaxDim> shifted{};
        std::copy(x.begin(), x.end(), shifted.begin());
        for (std::size_t i = 0; i < motion.coords.size(); ++i) {
          shifted[motion.coords[i]] -= motion.components[i](t);
        }
        return a.eval(std::span<const double>(shifted.data(), x.size()), t);
      },
      invariant, a.lipschitz(), a.t_lo(), a.t_hi());
}

}  // namespace hjmra
