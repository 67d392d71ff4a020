#include <doctest.h>

#include <filesystem>

#include "hjmra/config.hpp"

using namespace hjmra;
using nlohmann::json;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(HJMRA_SOURCE_DIR) / "configs";

json minimal() {
  return json::parse(R"({
    "schema_version": 1,
    "name": "tiny",
    "system": {"name": "single_integrator", "params": {"dim": 1, "speed": 1.0}},
    "grid": {"axes": [{"lo": -4, "hi": 4, "count": 81}]},
    "task": {"t0": 0, "t1": 2, "targets": [{"box": {"lo": [-1], "hi": [1]}}]},
    "x0": [3]
  })");
}

std::string error_path(const json& j) {
  try {
    scenario_from_json(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("single-integrator file matches the built-in scenario") {
  const auto from_file = load_config(kConfigs / "si.json");
  const auto builtin = scenario_single_integrator(161);
  CHECK(from_file.grid == builtin.grid);
  CHECK(from_file.x0 == builtin.x0);
  CHECK(from_file.cascade.order == builtin.cascade.order);
  REQUIRE(from_file.task.size() == builtin.task.size());
  for (double x = -11.5; x < 12.0; x += 0.7) {
    for (double y = -11.5; y < 12.0; y += 0.9) {
      const std::vector<double> p{x, y};
      for (int k = 0; k < builtin.task.size(); ++k) {
        CHECK(from_file.task.targets[k].eval(p, 0.0) == builtin.task.targets[k].eval(p, 0.0));
        CHECK(from_file.task.safes[k].eval(p, 0.0) == builtin.task.safes[k].eval(p, 0.0));
      }
    }
  }
}

TEST_CASE("shipped configurations load") {
  for (const char* name : {"si.json", "cascade1d.json", "spacecraft.json", "unicycle.json", "di.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_config(kConfigs / name));
  }
}

TEST_CASE("defaults") {
  const auto sc = scenario_from_json(minimal());
  CHECK(sc.name == "tiny");
  CHECK(sc.task.size() == 1);
  CHECK(sc.task.safes[0].eval(std::vector<double>{0.0}, 0.0) > 0.0);
  CHECK(sc.sim.dt_ctrl == doctest::Approx(0.1));
  CHECK(sc.cascade.order == 1);
}

TEST_CASE("errors name the offending field") {
  auto j = minimal();
  j["task"]["targets"][0] = json::parse(R"({"ball": {"center": [0], "radius": -1}})");
  CHECK(error_path(j) == "task.targets[0].ball.radius");

  j = minimal();
  j["solver"] = {{"cfl", 0.8}, {"cfll", 0.5}};
  CHECK(error_path(j) == "solver.cfll");

  j = minimal();
  j["schema_version"] = 7;
  CHECK(error_path(j) == "schema_version");

  j = minimal();
  j["system"]["name"] = "boat";
  CHECK(error_path(j) == "system.name");

  j = minimal();
  j["x0"] = {1.0, 2.0};
  CHECK(error_path(j) == "x0");

  j = minimal();
  j["controller"] = json::parse(R"({"Q": [[1, 2], [2, 1]]})");
  CHECK(error_path(j).rfind("controller.Q", 0) == 0);

  j = minimal();
  j["grid"]["axes"][0]["count"] = 1;
  CHECK(error_path(j).rfind("grid.axes[0]", 0) == 0);

  CHECK_THROWS_AS(load_config(kConfigs / "missing.json"), ConfigError);
}

TEST_CASE("region expressions") {
  const auto r = region_from_json(json::parse(R"({"difference": [
      {"union": [{"ball": {"center": [0, 0], "radius": 2}}, {"box": {"lo": [1, -1], "hi": [4, 1]}}]},
      {"ball": {"center": [3, 0], "radius": 0.5}}]})"),
                                  2);
  CHECK(r.eval(std::vector<double>{0.0, 0.0}, 0.0) > 0.0);
  CHECK(r.eval(std::vector<double>{3.0, 0.0}, 0.0) < 0.0);
  CHECK(r.eval(std::vector<double>{3.8, 0.0}, 0.0) > 0.0);

  const auto moving = region_from_json(json::parse(R"({"translate": {
      "region": {"ball": {"center": [0, 0], "radius": 1}},
      "coords": [0],
      "offsets": [{"knots": [[0, 0], [5, 5], [10, 0]], "period": 10}]}})"),
                                       2);
  CHECK(moving.eval(std::vector<double>{5.0, 0.0}, 5.0) == doctest::Approx(1.0));
  CHECK(moving.eval(std::vector<double>{5.0, 0.0}, 15.0) == doctest::Approx(1.0));
  CHECK(moving.eval(std::vector<double>{5.0, 0.0}, 0.0) == doctest::Approx(-4.0));

  try {
    region_from_json(json::parse(R"({"union": [{"ball": {"center": [0, 0], "radius": 1}}, {"blob": {}}]})"), 2);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "region.union[1]");
  }
}
