#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hjmra/contour.hpp"

using namespace hjmra;

TEST_CASE("circle contour is closed and on the circle") {
  const int n = 41;
  std::vector<double> v(n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = -2.0 + 0.1 * i, y = -2.0 + 0.1 * j;
      v[i * n + j] = 1.0 - std::hypot(x, y);
    }
  }
  const auto lines = marching_squares(v, n, n, -2.0, 0.1, -2.0, 0.1);
  REQUIRE(lines.size() == 1);
  const auto& c = lines[0];
  CHECK(c.front() == c.back());
  for (const auto& p : c) CHECK(std::abs(std::hypot(p[0], p[1]) - 1.0) < 0.01);
}

TEST_CASE("no crossing, no contour") {
  std::vector<double> v(25, 1.0);
  CHECK(marching_squares(v, 5, 5, 0.0, 1.0, 0.0, 1.0).empty());
  CHECK(marching_squares(v, 5, 5, 0.0, 1.0, 0.0, 1.0, 2.0).empty());
}

TEST_CASE("saddle cells follow the center value") {
  // Corners (0,0) and (1,1) inside, the other two outside.
  const std::vector<double> joined{1.0, -0.5, -0.5, 1.0};
  const auto a = marching_squares(joined, 2, 2, 0.0, 1.0, 0.0, 1.0);
  REQUIRE(a.size() == 2);
  // Center inside: each segment cuts off an outside corner.
  for (const auto& line : a) {
    const double mx = 0.5 * (line.front()[0] + line.back()[0]);
    const double my = 0.5 * (line.front()[1] + line.back()[1]);
    CHECK(std::abs(mx - my) > 0.2);
  }
  const std::vector<double> split{0.5, -1.0, -1.0, 0.5};
  const auto b = marching_squares(split, 2, 2, 0.0, 1.0, 0.0, 1.0);
  REQUIRE(b.size() == 2);
  for (const auto& line : b) {
    const double mx = 0.5 * (line.front()[0] + line.back()[0]);
    const double my = 0.5 * (line.front()[1] + line.back()[1]);
    CHECK(std::abs(mx - my) < 1e-12);
  }
}

TEST_CASE("field slices and CSV") {
  const Grid g({{-2.0, 2.0, 21, false}, {-2.0, 2.0, 21, false}, {-1.0, 1.0, 21, false}});
  GridField f(g, {0.0});
  std::vector<double> x(3);
  for (std::size_t q = 0; q < g.num_points(); ++q) {
    g.coords(q, x);
    f.slice(0)[q] = 0.8 - std::hypot(x[0], x[2]);
  }
  SliceSpec spec;
  spec.axis_x = 0;
  spec.axis_y = 2;
  spec.point = {0.0, 0.0, 0.0};
  const auto lines = slice_contours(f, spec);
  CHECK(lines.size() == 1);
  spec.axis_y = 0;
  CHECK_THROWS_AS(slice_contours(f, spec), std::invalid_argument);
  std::ostringstream os;
  write_contours_csv(lines, os);
  CHECK(os.str().rfind("contour,point,x,y\n", 0) == 0);
}
