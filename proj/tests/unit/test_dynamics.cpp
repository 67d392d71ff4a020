#include <doctest.h>

#include <cmath>
#include <random>

#include "hjmra/dynamics.hpp"

using namespace hjmra;

namespace {

// max_u p.(f + g u) + min_d p.(p d) by dense enumeration of the input sets.
double brute_hamiltonian(const SystemModel& sys, std::span<const double> x, double t, std::span<const double> grad) {
  ModelTerms T;
  T.evaluate(sys, x, t);
  auto lattice_best = [&](const BoundSet& S, const std::vector<double>& M, int cols, bool maximize) {
    if (cols == 0) return 0.0;
    double best = maximize ? -1e300 : 1e300;
    const int k = 400;
    std::vector<double> v(cols);
    const int total = cols == 1 ? k + 1 : (k + 1) * (k + 1);
    for (int idx = 0; idx < total; ++idx) {
      int rem = idx;
      for (int j = 0; j < cols; ++j) {
        const double s = static_cast<double>(rem % (k + 1)) / k;
        rem /= (k + 1);
        const double lo = S.kind() == BoundSet::Kind::box ? S.lo()[j] * S.scale(t) : -S.radius() * S.scale(t);
        const double hi = S.kind() == BoundSet::Kind::box ? S.hi()[j] * S.scale(t) : S.radius() * S.scale(t);
        v[j] = lo + s * (hi - lo);
      }
      if (!S.contains(v, t, 1e-12)) continue;
      double val = 0.0;
      for (int i = 0; i < sys.n; ++i) {
        for (int j = 0; j < cols; ++j) val += grad[i] * M[i * cols + j] * v[j];
      }
      best = maximize ? std::max(best, val) : std::min(best, val);
    }
    return best;
  };
  double h = 0.0;
  for (int i = 0; i < sys.n; ++i) h += grad[i] * T.f[i];
  return h + lattice_best(sys.U, T.g, sys.m, true) + lattice_best(sys.D, T.p, sys.l, false);
}

}  // namespace

TEST_CASE("bound sets") {
  const auto b = BoundSet::make_box({0.0, -0.3}, {3.0, 0.3});
  const std::vector<double> c{1.0, -2.0};
  CHECK(b.support(c, 0.0) == doctest::Approx(3.0 + 0.6));
  std::vector<double> u(2);
  b.maximizer(c, 0.0, u);
  CHECK(u[0] == 3.0);
  CHECK(u[1] == -0.3);
  const std::vector<double> zero{0.0, 0.0};
  b.maximizer(zero, 0.0, u);
  CHECK(u[0] == 0.0);
  CHECK(u[1] == 0.0);
  const auto disk = BoundSet::make_ball(2, 2.0);
  CHECK(disk.support(std::vector<double>{3.0, 4.0}, 0.0) == doctest::Approx(10.0));
  const auto scaled = disk.with_time_scale([](double t) { return 1.0 + t; });
  CHECK(scaled.support(std::vector<double>{3.0, 4.0}, 1.0) == doctest::Approx(20.0));
}

TEST_CASE("hamiltonian matches input enumeration") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<SystemModel> systems{single_integrator(2, 1.0), double_integrator(), spacecraft_rendezvous(),
                                         unicycle()};
  for (const auto& sys : systems) {
    for (int k = 0; k < 5; ++k) {
      std::vector<double> x(sys.n), p(sys.n);
      for (int i = 0; i < sys.n; ++i) {
        x[i] = 3.0 * u(rng);
        p[i] = u(rng);
      }
      const double t = 4.0 + 3.0 * u(rng);
      const double h = hamiltonian(sys, x, t, p);
      const double scale = 1.0 + std::abs(h);
      CHECK(h >= brute_hamiltonian(sys, x, t, p) - 1e-12 * scale);
      CHECK(h <= brute_hamiltonian(sys, x, t, p) + 2e-2 * scale);
    }
  }
}

TEST_CASE("single integrator") {
  const auto sys = single_integrator(2, 1.0);
  const std::vector<double> x{0.0, 0.0}, p{3.0, 4.0};
  CHECK(hamiltonian(sys, x, 0.0, p) == doctest::Approx(5.0));
  const auto u = argmax_control(sys, x, 0.0, p);
  CHECK(u[0] == doctest::Approx(0.6));
  CHECK(u[1] == doctest::Approx(0.8));
  const Grid g({{-1.0, 1.0, 3, false}, {-1.0, 1.0, 3, false}});
  const auto a = dissipation_bounds(sys, g, 0.0);
  CHECK(a[0] == doctest::Approx(1.0));
  CHECK(a[1] == doctest::Approx(1.0));
}

TEST_CASE("double integrator bound schedule") {
  CHECK(double_integrator_bound(0.0) == doctest::Approx(0.5));
  CHECK(double_integrator_bound(6.0) == doctest::Approx(0.8));
  CHECK(double_integrator_bound(12.0) == doctest::Approx(1.0));
  const auto sys = double_integrator();
  CHECK_FALSE(sys.time_invariant);
  const std::vector<double> x{0.0, 1.0, 0.0, -2.0}, u{1.0, -1.0}, d{};
  std::vector<double> dx(4);
  sys.derivative(x, u, d, 0.0, dx);
  CHECK(dx[0] == doctest::Approx(1.0));
  CHECK(dx[1] == doctest::Approx(0.5));
  CHECK(dx[2] == doctest::Approx(-2.0));
  CHECK(dx[3] == doctest::Approx(-0.5));
}

TEST_CASE("spacecraft parameters and disturbance") {
  const SpacecraftParams sp;
  CHECK(sp.mean_motion() == doctest::Approx(std::sqrt(sp.mu / (sp.r * sp.r * sp.r))));
  const auto sys = spacecraft_rendezvous();
  CHECK(sys.n == 4);
  CHECK(sys.m == 2);
  CHECK(sys.l == 1);
  // At the origin with zero velocity the drift vanishes.
  const std::vector<double> x{0.0, 0.0, 0.0, 0.0}, u{10.0, -10.0}, d{0.0};
  std::vector<double> dx(4);
  sys.derivative(x, u, d, 0.0, dx);
  CHECK(dx[2] == doctest::Approx(0.02).epsilon(1e-6));
  CHECK(dx[3] == doctest::Approx(-0.02).epsilon(1e-6));
  const std::vector<double> grad{0.0, 0.0, 1.0, 1.0};
  CHECK(worst_disturbance_term(sys, x, 0.0, grad) == doctest::Approx(-2.0 * 0.02 / 500.0));
  const auto dstar = argmin_disturbance(sys, x, 0.0, grad);
  CHECK(dstar[0] == doctest::Approx(-0.02));
}

TEST_CASE("unicycle") {
  const auto sys = unicycle();
  const std::vector<double> x{1.0, 2.0, M_PI / 2}, u{2.0, 0.1}, d{};
  std::vector<double> dx(3);
  sys.derivative(x, u, d, 0.0, dx);
  CHECK(dx[0] == doctest::Approx(0.0).scale(1.0));
  CHECK(dx[1] == doctest::Approx(2.0));
  CHECK(dx[2] == doctest::Approx(0.1));
  // Speed is one-sided: pointing away from the gradient gives v = 0.
  const std::vector<double> away{0.0, -1.0, 0.0};
  CHECK(argmax_control(sys, x, 0.0, away)[0] == 0.0);
  const Grid g({{0.0, 1.0, 3, false}, {0.0, 1.0, 3, false}, {0.0, 2.0 * M_PI, 8, true}});
  const auto a = dissipation_bounds(sys, g, 0.0);
  CHECK(a[0] == doctest::Approx(3.0));
  CHECK(a[1] == doctest::Approx(3.0));
  CHECK(a[2] == doctest::Approx(0.3));
}
