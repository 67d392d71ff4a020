#pragma once

#include <array>
#include <ostream>
#include <span>
#include <vector>

#include "hjmra/grid.hpp"

namespace hjmra {

/// 2-D slice through a field: two free axes, the rest fixed at `point`.
struct SliceSpec {
  int axis_x = 0;
  int axis_y = 1;
  /// Full state vector; entries on the free axes are ignored.
  std::vector<double> point;
  double t = 0.0;
  double level = 0.0;
};

using Polyline = std::vector<std::array<double, 2>>;

/// Level-set contours of a node array laid out x-major (values[i * ny + j]).
/// Saddle cells are resolved by the cell-center average.
std::vector<Polyline> marching_squares(std::span<const double> values, int nx, int ny, double x0, double dx,
                                       double y0, double dy, double level = 0.0);

/// Contours of a field slice, sampled on the free axes' grid nodes.
std::vector<Polyline> slice_contours(const GridField& field, const SliceSpec& spec);

/// CSV rows: contour, point, x, y.
void write_contours_csv(const std::vector<Polyline>& contours, std::ostream& out);

}  // namespace hjmra
