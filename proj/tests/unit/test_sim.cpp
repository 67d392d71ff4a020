#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hjmra/sim.hpp"

using namespace hjmra;

namespace {

PolicyOutput constant_control(double v) {
  PolicyOutput out;
  out.u = {v};
  return out;
}

Trajectory path(std::vector<double> xs, double dt = 0.1) {
  Trajectory tr;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    tr.times.push_back(dt * static_cast<double>(k));
    tr.states.push_back({xs[k]});
  }
  return tr;
}

}  // namespace

TEST_CASE("constant field integrates exactly") {
  const auto sys = single_integrator(1, 1.0);
  SimConfig cfg;
  const auto traj = simulate(sys, [](std::span<const double>, double) { return constant_control(1.0); }, {},
                             std::vector<double>{0.0}, 0.0, 1.0, cfg);
  CHECK(std::abs(traj.states.back()[0] - 1.0) <= 1e-12);
  CHECK(traj.times.back() == doctest::Approx(1.0));
  cfg.integrator = SimConfig::Integrator::euler;
  const auto euler = simulate(sys, [](std::span<const double>, double) { return constant_control(1.0); }, {},
                              std::vector<double>{0.0}, 0.0, 1.0, cfg);
  CHECK(std::abs(euler.states.back()[0] - 1.0) <= 1e-12);
}

TEST_CASE("zero disturbance reproduces the nominal dynamics") {
  const auto sys = spacecraft_rendezvous();
  auto ctrl = [](std::span<const double>, double) {
    PolicyOutput out;
    out.u = {1.0, -2.0};
    return out;
  };
  SimConfig cfg;
  const std::vector<double> x0{-47.0, -44.0, 1.35, 1.8};
  const auto a = simulate(sys, ctrl, {}, x0, 0.0, 5.0, cfg);
  cfg.disturbance = DisturbancePolicy::scripted({{0.0, {0.0}}});
  const auto b = simulate(sys, ctrl, {}, x0, 0.0, 5.0, cfg);
  CHECK(a.states.back() == b.states.back());
  cfg.disturbance = DisturbancePolicy::uniform_random(4);
  const auto c = simulate(sys, ctrl, {}, x0, 0.0, 5.0, cfg);
  const auto d = simulate(sys, ctrl, {}, x0, 0.0, 5.0, cfg);
  CHECK(c.states.back() == d.states.back());
  CHECK(c.states.back() != a.states.back());
  for (const auto& row : c.disturbances) CHECK(std::abs(row[0]) <= 0.02);
}

TEST_CASE("configuration checks") {
  SimConfig cfg;
  CHECK(cfg.substeps() == 10);
  cfg.dt_ctrl = 0.015;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.dt_ctrl = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("witness search") {
  MraTask task;
  task.t0 = 0.0;
  task.t1 = 10.0;
  task.targets = {box(1, {4.0}, {5.0}), box(1, {-1.0}, {0.0})};
  task.safes = {box(1, {-2.0}, {12.0}), box(1, {-2.0}, {12.0})};

  MraTask inside = task;
  inside.targets = {box(1, {0.0}, {1.0}), box(1, {0.0}, {1.0})};
  inside.safes = {box(1, {-1.0}, {2.0}), box(1, {-1.0}, {2.0})};
  const auto still = check_mra(path({0.5, 0.5, 0.5}), inside);
  CHECK(still.satisfied);
  REQUIRE(still.taus.size() == 2);
  CHECK(still.taus[0] == 0.0);
  CHECK(still.taus[1] == 0.0);

  std::vector<double> xs;
  for (int k = 0; k <= 100; ++k) xs.push_back(k <= 45 ? 4.5 * k / 45.0 : 4.5 - 5.0 * (k - 45) / 55.0);
  const auto ok = check_mra(path(xs), task);
  CHECK(ok.satisfied);
  REQUIRE(ok.taus.size() == 2);
  CHECK(ok.taus[0] >= 4.0 - 0.2);
  CHECK(ok.taus[0] <= 5.0 + 0.2);
  CHECK(ok.taus[1] <= 10.0);

  auto bad = xs;
  bad[10] = -5.0;
  const auto viol = check_mra(path(bad), task);
  CHECK_FALSE(viol.satisfied);
  REQUIRE(viol.violation_index.has_value());
  CHECK(*viol.violation_index == 10);
  CHECK_FALSE(viol.reason.empty());

  const auto unfinished = check_mra(path({0.0, 1.0, 2.0}), task);
  CHECK_FALSE(unfinished.satisfied);
  CHECK(unfinished.legs_done == 0);
}

TEST_CASE("trajectory words") {
  ltl::Labeling lab;
  lab.ap = {"a", "e"};
  lab.regions = {box(1, {2.0}, {3.0}), box(1, {-10.0}, {10.0})};
  CHECK(trajectory_word(path({0.0, 0.5, 1.0}), lab) == ltl::Word{2});
  CHECK(trajectory_word(path({0.0, 2.2, 2.5, 2.8, 4.0, 4.5}), lab) == ltl::Word{2, 3, 2});
  CHECK(trajectory_word(path({0.0, 2.5, 0.0, 0.0}), lab) == ltl::Word{2});
}

TEST_CASE("numerical tolerance") {
  const Grid g({{0.0, 1.0, 11, false}, {0.0, 1.0, 11, false}});
  const double dx = std::hypot(0.1, 0.1);
  CHECK(numerical_tolerance(2.0, g, 0.1, 3.0) == doctest::Approx(2.0 * (0.5 * 2.0 * dx + 0.1 * 2.0 * 3.0)));
  GridField f(g, {0.0});
  std::vector<double> x(2);
  for (std::size_t q = 0; q < g.num_points(); ++q) {
    g.coords(q, x);
    f.slice(0)[q] = 3.0 * x[0] - 4.0 * x[1];
  }
  CHECK(max_gradient_norm(f) == doctest::Approx(5.0));
}

TEST_CASE("trajectory CSV") {
  const auto sys = single_integrator(1, 1.0);
  const auto traj = simulate(sys, [](std::span<const double>, double) { return constant_control(0.5); }, {},
                             std::vector<double>{0.0}, 0.0, 0.2, SimConfig{});
  std::ostringstream os;
  write_trajectory_csv(traj, os);
  const auto text = os.str();
  CHECK(text.rfind("t,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(traj.size()) + 1);
}
