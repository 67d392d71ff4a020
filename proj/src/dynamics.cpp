#include "hjmra/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace hjmra {

namespace {
constexpr int kMaxDim = 16;
}

// ---------------------------------------------------------------------------
// BoundSet

BoundSet BoundSet::make_box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.size() != hi.size()) throw ModelError("box bound: lo/hi size mismatch");
  for (std::size_t j = 0; j < lo.size(); ++j) {
    if (!(lo[j] <= hi[j])) throw ModelError("box bound: lo must not exceed hi");
  }
  BoundSet b;
  b.kind_ = Kind::box;
  b.dim_ = static_cast<int>(lo.size());
  b.lo_ = std::move(lo);
  b.hi_ = std::move(hi);
  return b;
}

BoundSet BoundSet::make_ball(int dim, double radius) {
  if (dim <= 0) throw ModelError("ball bound: dimension must be positive");
  if (!(radius >= 0.0)) throw ModelError("ball bound: radius must be non-negative");
  BoundSet b;
  b.kind_ = Kind::ball;
  b.dim_ = dim;
  b.radius_ = radius;
  return b;
}

BoundSet BoundSet::with_time_scale(std::function<double(double)> scale) const {
  BoundSet b = *this;
  b.scale_ = std::move(scale);
  return b;
}

double BoundSet::support(std::span<const double> c, double t) const {
  if (dim_ == 0) return 0.0;
  const double s = scale(t);
  if (kind_ == Kind::ball) {
    double n2 = 0.0;
    for (int j = 0; j < dim_; ++j) n2 += c[j] * c[j];
    return s * radius_ * std::sqrt(n2);
  }
  double v = 0.0;
  for (int j = 0; j < dim_; ++j) v += std::max(c[j] * lo_[j], c[j] * hi_[j]);
  return s * v;
}

void BoundSet::maximizer(std::span<const double> c, double t, std::span<double> out) const {
  const double s = scale(t);
  if (kind_ == Kind::ball) {
    double n2 = 0.0;
    for (int j = 0; j < dim_; ++j) n2 += c[j] * c[j];
    const double norm = std::sqrt(n2);
    for (int j = 0; j < dim_; ++j) out[j] = norm > 0.0 ? s * radius_ * c[j] / norm : 0.0;
    return;
  }
  for (int j = 0; j < dim_; ++j) {
    if (c[j] > 0.0) {
      out[j] = s * hi_[j];
    } else if (c[j] < 0.0) {
      out[j] = s * lo_[j];
    } else {
      out[j] = (lo_[j] <= 0.0 && hi_[j] >= 0.0) ? 0.0 : s * lo_[j];
    }
  }
}

double BoundSet::axis_extent(int j, double t) const {
  const double s = scale(t);
  if (kind_ == Kind::ball) return s * radius_;
  return s * std::max(std::abs(lo_[j]), std::abs(hi_[j]));
}

bool BoundSet::contains(std::span<const double> v, double t, double tol) const {
  const double s = scale(t);
  if (kind_ == Kind::ball) {
    double n2 = 0.0;
    for (int j = 0; j < dim_; ++j) n2 += v[j] * v[j];
    return std::sqrt(n2) <= s * radius_ + tol;
  }
  for (int j = 0; j < dim_; ++j) {
    if (v[j] < s * lo_[j] - tol || v[j] > s * hi_[j] + tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// SystemModel

void SystemModel::validate() const {
  if (n <= 0 || n > kMaxDim) throw ModelError(name + ": state dimension must be in [1, 16]");
  if (m < 0 || l < 0 || m > kMaxDim || l > kMaxDim) throw ModelError(name + ": bad input dimensions");
  if (!f) throw ModelError(name + ": drift f is not set");
  if (m > 0 && !g) throw ModelError(name + ": control gain g is not set");
  if (l > 0 && !p) throw ModelError(name + ": disturbance gain p is not set");
  if (U.dim() != m) throw ModelError(name + ": control set dimension differs from m");
  if (D.dim() != l) throw ModelError(name + ": disturbance set dimension differs from l");
}

void SystemModel::derivative(std::span<const double> x, std::span<const double> u,
                             std::span<const double> d, double t, std::span<double> out) const {
  std::array<double, kMaxDim * kMaxDim> buf{};
  f(x, t, out);
  if (m > 0) {
    g(x, t, std::span<double>(buf.data(), static_cast<std::size_t>(n * m)));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) out[i] += buf[i * m + j] * u[j];
    }
  }
  if (l > 0) {
    p(x, t, std::span<double>(buf.data(), static_cast<std::size_t>(n * l)));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < l; ++j) out[i] += buf[i * l + j] * d[j];
    }
  }
}

void ModelTerms::evaluate(const SystemModel& sys, std::span<const double> x, double t) {
  f.resize(sys.n);
  g.resize(static_cast<std::size_t>(sys.n * sys.m));
  p.resize(static_cast<std::size_t>(sys.n * sys.l));
  sys.f(x, t, f);
  if (sys.m > 0) sys.g(x, t, g);
  if (sys.l > 0) sys.p(x, t, p);
}

// ---------------------------------------------------------------------------
// Hamiltonian

namespace {

// out_j = sum_i grad_i M_ij for an n x k row-major matrix.
void transpose_apply(std::span<const double> M, int n, int k, std::span<const double> grad,
                     std::span<double> out) {
  for (int j = 0; j < k; ++j) out[j] = 0.0;
  for (int i = 0; i < n; ++i) {
    const double gi = grad[i];
    if (gi == 0.0) continue;
    for (int j = 0; j < k; ++j) out[j] += gi * M[i * k + j];
  }
}

}  // namespace

double hamiltonian(const SystemModel& sys, const ModelTerms& terms, double t,
                   std::span<const double> grad) {
  double h = 0.0;
  for (int i = 0; i < sys.n; ++i) h += grad[i] * terms.f[i];
  std::array<double, kMaxDim> c{};
  if (sys.m > 0) {
    transpose_apply(terms.g, sys.n, sys.m, grad, c);
    h += sys.U.support(std::span<const double>(c.data(), sys.m), t);
  }
  if (sys.l > 0) {
    transpose_apply(terms.p, sys.n, sys.l, grad, c);
    for (int j = 0; j < sys.l; ++j) c[j] = -c[j];
    h -= sys.D.support(std::span<const double>(c.data(), sys.l), t);
  }
  return h;
}

double hamiltonian(const SystemModel& sys, std::span<const double> x, double t,
                   std::span<const double> grad) {
  ModelTerms terms;
  terms.evaluate(sys, x, t);
  return hamiltonian(sys, terms, t, grad);
}

std::vector<double> argmax_control(const SystemModel& sys, std::span<const double> x, double t,
                                   std::span<const double> grad) {
  std::vector<double> u(sys.m, 0.0);
  if (sys.m == 0) return u;
  ModelTerms terms;
  terms.evaluate(sys, x, t);
  std::array<double, kMaxDim> c{};
  transpose_apply(terms.g, sys.n, sys.m, grad, c);
  sys.U.maximizer(std::span<const double>(c.data(), sys.m), t, u);
  return u;
}

std::vector<double> argmin_disturbance(const SystemModel& sys, std::span<const double> x,
                                       double t, std::span<const double> grad) {
  std::vector<double> d(sys.l, 0.0);
  if (sys.l == 0) return d;
  ModelTerms terms;
  terms.evaluate(sys, x, t);
  std::array<double, kMaxDim> c{};
  transpose_apply(terms.p, sys.n, sys.l, grad, c);
  for (int j = 0; j < sys.l; ++j) c[j] = -c[j];
  sys.D.maximizer(std::span<const double>(c.data(), sys.l), t, d);
  return d;
}

double worst_disturbance_term(const SystemModel& sys, std::span<const double> x, double t,
                              std::span<const double> grad) {
  if (sys.l == 0) return 0.0;
  ModelTerms terms;
  terms.evaluate(sys, x, t);
  std::array<double, kMaxDim> c{};
  transpose_apply(terms.p, sys.n, sys.l, grad, c);
  for (int j = 0; j < sys.l; ++j) c[j] = -c[j];
  return -sys.D.support(std::span<const double>(c.data(), sys.l), t);
}

namespace {

double input_row_bound(const BoundSet& B, std::span<const double> M, int k, int row, double t) {
  if (k == 0) return 0.0;
  if (B.kind() == BoundSet::Kind::ball) {
    double n2 = 0.0;
    for (int j = 0; j < k; ++j) n2 += M[row * k + j] * M[row * k + j];
    return B.scale(t) * B.radius() * std::sqrt(n2);
  }
  double s = 0.0;
  for (int j = 0; j < k; ++j) s += std::abs(M[row * k + j]) * B.axis_extent(j, t);
  return s;
}

}  // namespace

std::vector<double> dissipation_bounds(const SystemModel& sys, const Grid& grid, double t) {
  if (grid.dim() != sys.n) throw ModelError("dissipation_bounds: grid and system dimensions differ");
  std::vector<double> alpha(sys.n, 0.0);
  std::array<double, kMaxDim> x{};
  const std::span<double> xs(x.data(), sys.n);
  ModelTerms terms;
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    grid.coords(p, xs);
    terms.evaluate(sys, xs, t);
    for (int i = 0; i < sys.n; ++i) {
      const double a = std::abs(terms.f[i]) + input_row_bound(sys.U, terms.g, sys.m, i, t) +
                       input_row_bound(sys.D, terms.p, sys.l, i, t);
      alpha[i] = std::max(alpha[i], a);
    }
  }
  return alpha;
}

// ---------------------------------------------------------------------------
// Built-in systems

SystemModel single_integrator(int dim, double speed) {
  SystemModel s;
  s.name = "single_integrator";
  s.n = dim;
  s.m = dim;
  s.l = 0;
  s.f = [](std::span<const double>, double, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  s.g = [dim](std::span<const double>, double, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int i = 0; i < dim; ++i) out[i * dim + i] = 1.0;
  };
  s.U = BoundSet::make_ball(dim, speed);
  s.lipschitz = 0.0;
  s.validate();
  return s;
}

double double_integrator_bound(double t) { return t < 10.0 ? 0.5 + 0.05 * t : 1.0; }

SystemModel double_integrator() {
  SystemModel s;
  s.name = "double_integrator";
  s.n = 4;
  s.m = 2;
  s.l = 0;
  s.f = [](std::span<const double> x, double, std::span<double> out) {
    out[0] = x[1];
    out[1] = 0.0;
    out[2] = x[3];
    out[3] = 0.0;
  };
  // u_x drives vx and u_y drives vy, each scaled by u_m(t).
  s.g = [](std::span<const double>, double t, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const double um = double_integrator_bound(t);
    out[1 * 2 + 0] = um;
    out[3 * 2 + 1] = um;
  };
  s.U = BoundSet::make_box({-1.0, -1.0}, {1.0, 1.0});
  s.time_invariant = false;
  s.lipschitz = 1.0;
  s.validate();
  return s;
}

double SpacecraftParams::mean_motion() const { return std::sqrt(mu / (r * r * r)); }

SystemModel spacecraft_rendezvous(const SpacecraftParams& prm) {
  SystemModel s;
  s.name = "spacecraft_rendezvous";
  s.n = 4;
  s.m = 2;
  s.l = 1;
  const double mu = prm.mu;
  const double r = prm.r;
  const double n = prm.mean_motion();
  const double mc = prm.m_c;
  s.f = [=](std::span<const double> x, double, std::span<double> out) {
    const double px = x[0];
    const double py = x[1];
    const double vx = x[2];
    const double vy = x[3];
    const double rc = std::sqrt((r + px) * (r + px) + py * py);
    const double rc3 = rc * rc * rc;
    out[0] = vx;
    out[1] = vy;
    out[2] = n * n * px + 2.0 * n * vy + mu / (r * r) - mu / rc3 * (r + px);
    out[3] = n * n * py - 2.0 * n * vx - mu / rc3 * py;
  };
  s.g = [mc](std::span<const double>, double, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    out[2 * 2 + 0] = 1.0 / mc;
    out[3 * 2 + 1] = 1.0 / mc;
  };
  s.p = [mc](std::span<const double>, double, std::span<double> out) {
    out[0] = 0.0;
    out[1] = 0.0;
    out[2] = 1.0 / mc;
    out[3] = 1.0 / mc;
  };
  s.U = BoundSet::make_box({-prm.u_max, -prm.u_max}, {prm.u_max, prm.u_max});
  s.D = BoundSet::make_box({-prm.d_max}, {prm.d_max});
  s.lipschitz = 1.0 + 3.0 * n * n + 2.0 * n;
  s.validate();
  return s;
}

SystemModel unicycle(double v_max, double omega_max) {
  SystemModel s;
  s.name = "unicycle";
  s.n = 3;
  s.m = 2;
  s.l = 0;
  s.f = [](std::span<const double>, double, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  s.g = [](std::span<const double> x, double, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    out[0 * 2 + 0] = std::cos(x[2]);
    out[1 * 2 + 0] = std::sin(x[2]);
    out[2 * 2 + 1] = 1.0;
  };
  s.U = BoundSet::make_box({0.0, -omega_max}, {v_max, omega_max});
  s.lipschitz = v_max;
  s.validate();
  return s;
}

}  // namespace hjmra
