#include <doctest.h>

#include <cmath>
#include <random>

#include "hjmra/implicit_set.hpp"

using namespace hjmra;

namespace {

double at(const ImplicitSet& s, std::vector<double> x, double t = 0.0) { return s.eval(x, t); }

// Distance from a point to a 2-D box by dense sampling of its boundary.
double box_depth_brute(double x, double y, double lx, double ly, double hx, double hy) {
  double best = 1e300;
  const int n = 4000;
  for (int k = 0; k <= n; ++k) {
    const double s = static_cast<double>(k) / n;
    const double px[4] = {lx + s * (hx - lx), lx + s * (hx - lx), lx, hx};
    const double py[4] = {ly, hy, ly + s * (hy - ly), ly + s * (hy - ly)};
    for (int e = 0; e < 4; ++e) best = std::min(best, std::hypot(x - px[e], y - py[e]));
  }
  const bool inside = x >= lx && x <= hx && y >= ly && y <= hy;
  return inside ? best : -best;
}

}  // namespace

TEST_CASE("ball level values") {
  const auto r1 = ball(2, {-6.0, 0.0}, 2.0);
  CHECK(at(r1, {-6.0, 0.0}) == doctest::Approx(2.0));
  CHECK(at(r1, {-4.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(at(r1, {0.0, 0.0}) == doctest::Approx(-4.0));
  CHECK(r1.contains(std::vector<double>{-4.0, 0.0}, 0.0));
}

TEST_CASE("box signed distance against brute force") {
  const auto b = box(2, {-1.0, -2.5}, {1.0, 2.5});
  CHECK(at(b, {0.0, 0.0}) == doctest::Approx(1.0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int k = 0; k < 200; ++k) {
    const double x = u(rng), y = u(rng);
    CHECK(at(b, {x, y}) == doctest::Approx(box_depth_brute(x, y, -1.0, -2.5, 1.0, 2.5)).epsilon(1e-3).scale(1.0));
  }
}

TEST_CASE("primitives on selected coordinates ignore the rest") {
  const auto disk = ball(4, {1.0, 2.0}, 1.5, {0, 2});
  CHECK(at(disk, {1.0, 100.0, 2.0, -7.0}) == doctest::Approx(1.5));
  const auto slab = slab_box(4, {-5.0, -5.0, 0.0, 0.0}, {0.0, 0.0, 2.0, 2.0});
  CHECK(at(slab, {-1.0, -2.0, 1.0, 1.9}) == doctest::Approx(0.1));
  CHECK(at(slab, {-1.0, -2.0, 2.5, 1.0}) == doctest::Approx(-0.5));
  const auto hs = halfspace(2, {3.0, 4.0}, 5.0);
  CHECK(at(hs, {0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(at(hs, {3.0, 4.0}) == doctest::Approx(-4.0));
}

TEST_CASE("degenerate geometry is rejected") {
  CHECK_THROWS_AS(ball(2, {0.0, 0.0}, 0.0), GeometryError);
  CHECK_THROWS_AS(box(2, {0.0, 0.0}, {1.0, 0.0}), GeometryError);
  CHECK_THROWS_AS(halfspace(2, {0.0, 0.0}, 1.0), GeometryError);
  CHECK_THROWS_AS(ball(2, {0.0}, 1.0, {5}), GeometryError);
  CHECK_THROWS_AS(set_union(ball(2, {0.0, 0.0}, 1.0), ball(3, {0.0, 0.0, 0.0}, 1.0)), GeometryError);
}

TEST_CASE("CSG identities") {
  const auto a = ball(2, {-2.0, 0.0}, 1.0);
  const auto b = ball(2, {2.0, 0.0}, 1.0);
  const auto u = set_union(a, b);
  CHECK(at(u, {-2.0, 0.3}) == doctest::Approx(at(a, {-2.0, 0.3})));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-4.0, 4.0);
  const auto cc = set_complement(set_complement(a));
  const auto empty = set_intersect(a, set_complement(a));
  for (int k = 0; k < 500; ++k) {
    const std::vector<double> x{d(rng), d(rng)};
    CHECK(cc.eval(x, 0.0) == a.eval(x, 0.0));
    CHECK(empty.eval(x, 0.0) <= 0.0);
  }
}

TEST_CASE("CSG membership matches Boolean algebra") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  std::uniform_real_distribution<double> r(0.5, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = ball(2, {d(rng), d(rng)}, r(rng));
    const auto b = box(2, {-1.0 + d(rng) / 3, -1.0}, {1.5 + d(rng) / 3, 1.0 + r(rng)});
    const auto u = set_union(a, b);
    const auto i = set_intersect(a, b);
    const auto diff = set_difference(a, b);
    for (int k = 0; k < 40; ++k) {
      const std::vector<double> x{d(rng), d(rng)};
      const double ha = a.eval(x, 0.0), hb = b.eval(x, 0.0);
      if (std::abs(ha) < 1e-9 || std::abs(hb) < 1e-9) continue;
      CHECK((u.eval(x, 0.0) >= 0.0) == (ha >= 0.0 || hb >= 0.0));
      CHECK((i.eval(x, 0.0) >= 0.0) == (ha >= 0.0 && hb >= 0.0));
      CHECK((diff.eval(x, 0.0) >= 0.0) == (ha >= 0.0 && hb < 0.0));
    }
  }
}

TEST_CASE("composites stay 1-Lipschitz") {
  const auto s = set_difference(set_union(ball(2, {0.0, 0.0}, 2.0), box(2, {1.0, -1.0}, {4.0, 1.0})),
                                ball(2, {2.0, 0.5}, 0.7));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  std::uniform_real_distribution<double> step(-1e-3, 1e-3);
  double worst = 0.0;
  for (int k = 0; k < 5000; ++k) {
    const std::vector<double> x{d(rng), d(rng)};
    const std::vector<double> y{x[0] + step(rng), x[1] + step(rng)};
    const double dist = std::hypot(x[0] - y[0], x[1] - y[1]);
    if (dist == 0.0) continue;
    worst = std::max(worst, std::abs(s.eval(x, 0.0) - s.eval(y, 0.0)) / dist);
  }
  CHECK(worst <= s.lipschitz() + 1e-6);
}

TEST_CASE("piecewise-linear motion and translation") {
  const PiecewiseLinear xhat({{0.0, 0.0}, {5.0, 5.0}, {10.0, 0.0}}, 10.0);
  CHECK(xhat(0.0) == 0.0);
  CHECK(xhat(5.0) == 5.0);
  CHECK(xhat(2.5) == doctest::Approx(2.5));
  CHECK(xhat(12.5) == doctest::Approx(2.5));
  CHECK(xhat(-2.5) == doctest::Approx(2.5));
  const PiecewiseLinear held({{0.0, 1.0}, {1.0, 3.0}}, 0.0);
  CHECK(held(-4.0) == 1.0);
  CHECK(held(9.0) == 3.0);
  CHECK_THROWS_AS(PiecewiseLinear({{1.0, 0.0}, {0.0, 1.0}}, 0.0), GeometryError);

  const auto base = ball(4, {-7.5, -6.0}, 1.3, {0, 2});
  const auto moving = translate(base, MotionProfile{{0}, {xhat}});
  CHECK_FALSE(moving.time_invariant());
  for (double t : {0.0, 1.0, 3.7, 5.0, 8.2}) {
    const std::vector<double> x{-4.0, 0.3, -5.5, 0.0};
    const std::vector<double> shifted{x[0] - xhat(t), x[1], x[2], x[3]};
    CHECK(moving.eval(x, t) == base.eval(shifted, t));
  }
}
