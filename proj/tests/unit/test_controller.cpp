#include <doctest.h>

#include <cmath>
#include <random>

#include "hjmra/controller.hpp"
#include "hjmra/scenarios.hpp"
#include "hjmra/sim.hpp"

using namespace hjmra;

namespace {

// b(x, t) = x - 0.5 t on [-2, 2] x [0, 1].
GridField ramp_field() {
  const Grid g({{-2.0, 2.0, 41, false}});
  GridField f(g, {0.0, 1.0});
  std::vector<double> x(1);
  for (std::size_t q = 0; q < g.num_points(); ++q) {
    g.coords(q, x);
    f.slice(0)[q] = x[0];
    f.slice(1)[q] = x[0] - 0.5;
  }
  return f;
}

Eigen::MatrixXd eye(int m) { return Eigen::MatrixXd::Identity(m, m); }

}  // namespace

TEST_CASE("half-space from a ramp field") {
  const auto f = ramp_field();
  const auto sys = single_integrator(1, 1.0);
  const std::vector<double> x{0.3};
  const auto h = feasible_halfspace(f, sys, x, 0.4);
  CHECK(h.a[0] == doctest::Approx(1.0));
  CHECK(h.rhs == doctest::Approx(0.5));
  CHECK(h.dbdt == doctest::Approx(-0.5));
  const std::vector<double> zero{0.0};
  const auto qp = solve_control_qp(sys.U, 0.4, eye(1), zero, h.a, h.rhs);
  CHECK(qp.u[0] == doctest::Approx(0.5));
  CHECK(qp.constraint_active);
  CHECK(qp.slack == doctest::Approx(0.0).scale(1.0));

  ControlLawConfig relaxed;
  relaxed.mode = ControlLawConfig::Mode::relaxed;
  relaxed.beta = interpolate(f, x, 0.4).value;
  CHECK(feasible_halfspace(f, sys, x, 0.4, relaxed).rhs == doctest::Approx(h.rhs));
  CHECK_THROWS_AS(feasible_halfspace(f, sys, std::vector<double>{3.0}, 0.4), ControllerError);
}

TEST_CASE("static field with no drift gives rhs zero") {
  const Grid g({{-2.0, 2.0, 41, false}});
  GridField f(g, {0.0, 1.0});
  std::vector<double> x(1);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t q = 0; q < g.num_points(); ++q) {
      g.coords(q, x);
      f.slice(k)[q] = 1.0 - x[0] * x[0];
    }
  }
  const auto h = feasible_halfspace(f, single_integrator(1, 1.0), std::vector<double>{0.5}, 0.3);
  CHECK(h.rhs == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("QP returns the reference when the constraint is slack") {
  const auto U = BoundSet::make_box({-1.0, -1.0}, {1.0, 1.0});
  const std::vector<double> ref{0.3, -0.2}, a{1.0, 0.0};
  const auto qp = solve_control_qp(U, 0.0, eye(2), ref, a, -0.5);
  CHECK(qp.u[0] == doctest::Approx(0.3));
  CHECK(qp.u[1] == doctest::Approx(-0.2));
  CHECK_FALSE(qp.constraint_active);
  const auto clipped = solve_control_qp(U, 0.0, eye(2), std::vector<double>{3.0, 0.0}, a, 0.0, false);
  CHECK(clipped.u[0] == doctest::Approx(1.0));
  CHECK(clipped.faces[0] == 1);
}

TEST_CASE("QP on a ball") {
  const auto U = BoundSet::make_ball(2, 1.0);
  const std::vector<double> ref{0.0, 0.0}, a{1.0, 1.0};
  const auto qp = solve_control_qp(U, 0.0, eye(2), ref, a, 1.0);
  CHECK(qp.u[0] == doctest::Approx(0.5));
  CHECK(qp.u[1] == doctest::Approx(0.5));
  CHECK_THROWS_AS(solve_control_qp(U, 0.0, eye(2), ref, a, 2.0), QpInfeasible);
}

TEST_CASE("QP agrees with a lattice search") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 201;
  for (int trial = 0; trial < 40; ++trial) {
    const auto U = BoundSet::make_box({-1.0, -0.5}, {2.0, 0.5});
    const double q12 = 0.4 * u(rng);
    Eigen::MatrixXd Q(2, 2);
    Q << 1.0 + 0.5 * u(rng) + 0.5, q12, q12, 1.0 + 0.5 * u(rng) + 0.5;
    const std::vector<double> ref{3.0 * u(rng), 3.0 * u(rng)}, a{u(rng), u(rng)};
    const double rhs = 0.5 * u(rng);
    QpSolution qp;
    try {
      qp = solve_control_qp(U, 0.0, Q, ref, a, rhs);
    } catch (const QpInfeasible&) {
      continue;
    }
    CHECK(qp.slack >= -1e-9);
    double best = 1e300;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const Eigen::Vector2d v(-1.0 + 3.0 * i / (n - 1), -0.5 + 1.0 * j / (n - 1));
        if (a[0] * v[0] + a[1] * v[1] < rhs) continue;
        const Eigen::Vector2d e = v - Eigen::Vector2d(ref[0], ref[1]);
        best = std::min(best, e.dot(Q * e));
      }
    }
    if (best < 1e300) CHECK(qp.objective <= best + 1e-12);
  }
}

TEST_CASE("law configuration checks") {
  ControlLawConfig cfg;
  CHECK_NOTHROW(cfg.validate(2));
  cfg.gain = 0.0;
  CHECK_THROWS_AS(cfg.validate(2), ControllerError);
  cfg.gain = 1.0;
  cfg.Q = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(cfg.validate(2), ControllerError);
  cfg.Q = Eigen::MatrixXd(2, 2);
  cfg.Q << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(cfg.validate(2), ControllerError);
  cfg.Q = eye(2);
  cfg.mode = ControlLawConfig::Mode::relaxed;
  CHECK_THROWS_AS(cfg.validate(2), ControllerError);
}

TEST_CASE("policy switching on the 1-D cascade") {
  const auto sc = scenario_cascade_1d(0.05);
  auto cascade = std::make_shared<const CascadeResult>(solve_cascade(sc.task, sc.sys, sc.grid, sc.cascade));

  SynthesisPolicy at_edge(cascade, sc.sys);
  const auto first = at_edge.step(std::vector<double>{5.0}, 0.0);
  CHECK(first.switched);
  REQUIRE(at_edge.switches().size() == 1);
  CHECK(at_edge.switches()[0].time == 0.0);
  CHECK(at_edge.current_target() == 2);

  SynthesisPolicy policy(cascade, sc.sys);
  const auto traj = simulate(policy, std::vector<double>{9.9}, 0.0, sc.sim);
  REQUIRE(traj.switches.size() == 2);
  CHECK(traj.switches[0].time <= 6.0 + 2.0 * sc.sim.dt_ctrl);
  CHECK(traj.switches[0].target_margin >= 0.0);
  CHECK(traj.completed);
  CHECK(policy.done());
  policy.reset();
  CHECK(policy.current_target() == 1);
  CHECK(policy.switches().empty());

  CHECK_THROWS_AS(SynthesisPolicy(cascade, sc.sys, {}, 20.0), ControllerError);
}
