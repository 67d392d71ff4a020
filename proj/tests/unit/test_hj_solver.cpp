#include <doctest.h>

#include <cmath>
#include <limits>

#include "hjmra/hj_solver.hpp"

using namespace hjmra;

namespace {

RaProblem reach_1d(double dx, int order = 1) {
  RaProblem pb;
  pb.sys = single_integrator(1, 1.0);
  const int count = static_cast<int>(std::lround(8.0 / dx)) + 1;
  pb.grid = Grid({{-4.0, 4.0, count, false}});
  pb.target = SliceSource::from_set(box(1, {-1.0}, {1.0}), pb.grid);
  pb.safe = SliceSource::constant(10.0);
  pb.t0 = 0.0;
  pb.t1 = 2.0;
  pb.output_dt = 0.5;
  pb.order = order;
  return pb;
}

double analytic_reach(double x) { return 1.0 - std::max(0.0, std::abs(x) - 2.0); }

// Best reach-avoid value over bang-bang inputs switched every 0.5 s on [0, T].
double bang_bang_value(double x0, double T, const ImplicitSet& target, const ImplicitSet& safe) {
  const int pieces = static_cast<int>(std::lround(T / 0.5));
  const int sub = 50;
  const double h = 0.5 / sub;
  double best = -1e300;
  int combos = 1;
  for (int k = 0; k < pieces; ++k) combos *= 3;
  for (int c = 0; c < combos; ++c) {
    double x = x0;
    int code = c;
    double running_safe = safe.eval(std::vector<double>{x}, 0.0);
    double value = std::min(target.eval(std::vector<double>{x}, 0.0), running_safe);
    for (int k = 0; k < pieces; ++k) {
      const double u = static_cast<double>(code % 3) - 1.0;
      code /= 3;
      for (int s = 0; s < sub; ++s) {
        x += h * u;
        const std::vector<double> xv{x};
        running_safe = std::min(running_safe, safe.eval(xv, 0.0));
        value = std::max(value, std::min(target.eval(xv, 0.0), running_safe));
      }
    }
    best = std::max(best, value);
  }
  return best;
}

}  // namespace

TEST_CASE("output stamps") {
  const auto s = output_stamps(0.0, 1.0, 0.3);
  REQUIRE(s.size() == 5);
  CHECK(s.front() == 0.0);
  CHECK(s[1] == doctest::Approx(0.3));
  CHECK(s.back() == 1.0);
  CHECK(output_stamps(0.0, 1.0, 0.5).size() == 3);
}

TEST_CASE("1-D reach matches the analytic value") {
  const double dx = 0.05;
  for (int order : {1, 2}) {
    CAPTURE(order);
    SolveStats stats;
    const auto V = solve_ra(reach_1d(dx, order), &stats);
    CHECK(stats.steps > 0);
    const Grid& g = V.grid();
    std::vector<double> x(1);
    double worst = 0.0;
    for (std::size_t q = 0; q < g.num_points(); ++q) {
      g.coords(q, x);
      worst = std::max(worst, std::abs(V.slice(0)[q] - analytic_reach(x[0])));
    }
    CHECK(worst <= 3.0 * dx);
    const auto mask = feasible_set(V, 0.0);
    for (std::size_t q = 0; q < g.num_points(); ++q) {
      g.coords(q, x);
      if (std::abs(x[0]) < 3.0 - dx) CHECK(mask[q] == 1);
      if (std::abs(x[0]) > 3.0 + dx) CHECK(mask[q] == 0);
    }
  }
}

TEST_CASE("boundary identity and safe envelope") {
  RaProblem pb;
  pb.sys = single_integrator(2, 1.0);
  pb.grid = Grid({{-3.0, 3.0, 41, false}, {-3.0, 3.0, 41, false}});
  const auto target = ball(2, {1.0, 1.0}, 0.8);
  const auto safe = set_difference(box(2, {-2.8, -2.8}, {2.8, 2.8}), ball(2, {-0.5, 0.0}, 0.7));
  pb.target = SliceSource::from_set(target, pb.grid);
  pb.safe = SliceSource::from_set(safe, pb.grid);
  pb.t1 = 3.0;
  pb.output_dt = 0.5;
  for (int order : {1, 2}) {
    pb.order = order;
    const auto V = solve_ra(pb);
    const auto hT = sample(target, pb.grid, 0.0);
    const auto hG = sample(safe, pb.grid, 0.0);
    const auto last = V.slice(V.num_slices() - 1);
    for (std::size_t q = 0; q < hT.size(); ++q) CHECK(last[q] == std::min(hT[q], hG[q]));
    bool envelope = true;
    for (std::size_t k = 0; k < V.num_slices(); ++k) {
      for (std::size_t q = 0; q < hG.size(); ++q) envelope = envelope && V.slice(k)[q] <= hG[q];
    }
    CHECK(envelope);
  }
}

TEST_CASE("an obstacle blocks the only path") {
  RaProblem pb;
  pb.sys = single_integrator(1, 1.0);
  pb.grid = Grid({{-2.0, 6.0, 161, false}});
  const auto target = box(1, {-1.0}, {1.0});
  const auto safe = set_complement(box(1, {2.0}, {3.0}));
  pb.target = SliceSource::from_set(target, pb.grid);
  pb.safe = SliceSource::from_set(safe, pb.grid);
  pb.t1 = 10.0;
  pb.output_dt = 1.0;
  const auto V = solve_ra(pb);
  CHECK(interpolate(V, std::vector<double>{4.0}, 0.0).value < 0.0);
  CHECK(interpolate(V, std::vector<double>{1.5}, 0.0).value > 0.0);
}

TEST_CASE("short-horizon values agree with bang-bang search") {
  RaProblem pb;
  pb.sys = single_integrator(1, 1.0);
  pb.grid = Grid({{-4.0, 6.0, 401, false}});
  const auto target = box(1, {3.0}, {3.5});
  const auto safe = set_complement(box(1, {0.5}, {1.0}));
  pb.target = SliceSource::from_set(target, pb.grid);
  pb.safe = SliceSource::from_set(safe, pb.grid);
  pb.t1 = 3.0;
  pb.output_dt = 1.0;
  pb.order = 2;
  const auto V = solve_ra(pb);
  for (double x0 : {-1.5, 0.0, 1.5, 2.0, 4.5, 5.5}) {
    CAPTURE(x0);
    CHECK(std::abs(interpolate(V, std::vector<double>{x0}, 0.0).value - bang_bang_value(x0, 3.0, target, safe)) <=
          2.0 * pb.grid.spacing(0));
  }
}

TEST_CASE("comparison principle on nested targets") {
  std::vector<GridField> fields;
  for (double r : {0.2, 0.5, 0.8, 1.1, 1.4}) {
    RaProblem pb = reach_1d(0.05);
    pb.target = SliceSource::from_set(box(1, {-r}, {r}), pb.grid);
    fields.push_back(solve_ra(pb));
  }
  for (std::size_t k = 1; k < fields.size(); ++k) {
    for (std::size_t s = 0; s < fields[k].num_slices(); ++s) {
      for (std::size_t q = 0; q < fields[k].grid().num_points(); ++q) {
        CHECK(fields[k - 1].slice(s)[q] <= fields[k].slice(s)[q] + 1e-9);
      }
    }
  }
}

TEST_CASE("thread count does not change the result") {
  RaProblem pb = reach_1d(0.05, 2);
  pb.threads = 1;
  const auto a = solve_ra(pb);
  pb.threads = 3;
  const auto b = solve_ra(pb);
  CHECK(a == b);
}

TEST_CASE("zero dynamics freeze the terminal value") {
  RaProblem pb = reach_1d(0.1);
  pb.sys = single_integrator(1, 0.0);
  const auto V = solve_ra(pb);
  for (std::size_t q = 0; q < V.grid().num_points(); ++q) CHECK(V.slice(0)[q] == V.slice(V.num_slices() - 1)[q]);
}

TEST_CASE("invalid problems and non-finite values") {
  RaProblem pb = reach_1d(0.1);
  pb.order = 3;
  CHECK_THROWS_AS(solve_ra(pb), SolverError);
  pb = reach_1d(0.1);
  pb.t1 = pb.t0;
  CHECK_THROWS_AS(solve_ra(pb), SolverError);
  pb = reach_1d(0.1);
  pb.target = SliceSource(
      [](double t, std::span<double> out) {
        for (auto& v : out) v = t < 1.0 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
      },
      false);
  CHECK_THROWS_AS(solve_ra(pb), SolverError);
}
