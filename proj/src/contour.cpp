#include "hjmra/contour.hpp"

#include <iomanip>
#include <stdexcept>
#include <unordered_map>

namespace hjmra {

namespace {

struct Segment {
  long long a;
  long long b;
};

}  // namespace

std::vector<Polyline> marching_squares(std::span<const double> values, int nx, int ny, double x0, double dx,
                                       double y0, double dy, double level) {
  if (nx < 2 || ny < 2) return {};
  if (values.size() != static_cast<std::size_t>(nx) * ny) throw std::invalid_argument("marching_squares: size mismatch");
  auto v = [&](int i, int j) { return values[static_cast<std::size_t>(i) * ny + j]; };
  // Edge ids: horizontal (i,j)-(i+1,j) is 2k, vertical (i,j)-(i,j+1) is 2k+1 with k = i*ny + j.
  auto h_edge = [&](int i, int j) { return 2LL * (static_cast<long long>(i) * ny + j); };
  auto v_edge = [&](int i, int j) { return 2LL * (static_cast<long long>(i) * ny + j) + 1; };

  std::unordered_map<long long, std::array<double, 2>> points;
  auto crossing = [&](long long id) {
    auto it = points.find(id);
    if (it != points.end()) return;
    const long long k = id / 2;
    const int i = static_cast<int>(k / ny);
    const int j = static_cast<int>(k % ny);
    const bool horizontal = id % 2 == 0;
    const double va = v(i, j);
    const double vb = horizontal ? v(i + 1, j) : v(i, j + 1);
    const double s = (level - va) / (vb - va);
    std::array<double, 2> p{x0 + i * dx, y0 + j * dy};
    if (horizontal) {
      p[0] += s * dx;
    } else {
      p[1] += s * dy;
    }
    points.emplace(id, p);
  };

  std::vector<Segment> segs;
  for (int i = 0; i + 1 < nx; ++i) {
    for (int j = 0; j + 1 < ny; ++j) {
      const double c00 = v(i, j), c10 = v(i + 1, j), c11 = v(i + 1, j + 1), c01 = v(i, j + 1);
      const int mask = (c00 >= level ? 1 : 0) | (c10 >= level ? 2 : 0) | (c11 >= level ? 4 : 0) | (c01 >= level ? 8 : 0);
      if (mask == 0 || mask == 15) continue;
      const long long bottom = h_edge(i, j), top = h_edge(i, j + 1), left = v_edge(i, j), right = v_edge(i + 1, j);
      std::vector<long long> cut;
      if (((mask >> 0) & 1) != ((mask >> 1) & 1)) cut.push_back(bottom);
      if (((mask >> 1) & 1) != ((mask >> 2) & 1)) cut.push_back(right);
      if (((mask >> 3) & 1) != ((mask >> 2) & 1)) cut.push_back(top);
      if (((mask >> 0) & 1) != ((mask >> 3) & 1)) cut.push_back(left);
      for (long long id : cut) crossing(id);
      if (cut.size() == 2) {
        segs.push_back({cut[0], cut[1]});
        continue;
      }
      const bool center_in = 0.25 * (c00 + c10 + c11 + c01) >= level;
      const bool diag_in = mask == 5;
      if (center_in == diag_in) {
        segs.push_back({bottom, right});
        segs.push_back({top, left});
      } else {
        segs.push_back({bottom, left});
        segs.push_back({right, top});
      }
    }
  }

  std::unordered_map<long long, std::vector<std::size_t>> at_edge;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    at_edge[segs[s].a].push_back(s);
    at_edge[segs[s].b].push_back(s);
  }
  std::vector<bool> used(segs.size(), false);
  auto next_from = [&](long long edge) -> long long {
    for (std::size_t s : at_edge[edge]) {
      if (used[s]) continue;
      used[s] = true;
      return segs[s].a == edge ? segs[s].b : segs[s].a;
    }
    return -1;
  };

  std::vector<Polyline> out;
  for (std::size_t s0 = 0; s0 < segs.size(); ++s0) {
    if (used[s0]) continue;
    used[s0] = true;
    std::vector<long long> chain{segs[s0].a, segs[s0].b};
    for (long long e = next_from(chain.back()); e >= 0; e = next_from(chain.back())) chain.push_back(e);
    std::vector<long long> head;
    for (long long e = next_from(chain.front()); e >= 0; e = next_from(head.back())) head.push_back(e);
    Polyline line;
    for (auto it = head.rbegin(); it != head.rend(); ++it) line.push_back(points.at(*it));
    for (long long e : chain) line.push_back(points.at(e));
    out.push_back(std::move(line));
  }
  return out;
}

std::vector<Polyline> slice_contours(const GridField& field, const SliceSpec& spec) {
  const Grid& grid = field.grid();
  const int n = grid.dim();
  if (spec.axis_x < 0 || spec.axis_x >= n || spec.axis_y < 0 || spec.axis_y >= n || spec.axis_x == spec.axis_y) {
    throw std::invalid_argument("slice axes must be two distinct state axes");
  }
  if (static_cast<int>(spec.point.size()) != n && !(n == 2 && spec.point.empty())) {
    throw std::invalid_argument("slice point must have one entry per state dimension");
  }
  const GridAxis& ax = grid.axis(spec.axis_x);
  const GridAxis& ay = grid.axis(spec.axis_y);
  std::vector<double> x = spec.point.empty() ? std::vector<double>(n, 0.0) : spec.point;
  std::vector<double> values(static_cast<std::size_t>(ax.count) * ay.count);
  for (int i = 0; i < ax.count; ++i) {
    x[spec.axis_x] = ax.node(i);
    for (int j = 0; j < ay.count; ++j) {
      x[spec.axis_y] = ay.node(j);
      values[static_cast<std::size_t>(i) * ay.count + j] = interpolate(field, x, spec.t).value;
    }
  }
  return marching_squares(values, ax.count, ay.count, ax.lo, ax.spacing(), ay.lo, ay.spacing(), spec.level);
}

void write_contours_csv(const std::vector<Polyline>& contours, std::ostream& out) {
  out << "contour,point,x,y\n" << std::setprecision(10);
  for (std::size_t c = 0; c < contours.size(); ++c) {
    for (std::size_t k = 0; k < contours[c].size(); ++k) {
      out << c << ',' << k << ',' << contours[c][k][0] << ',' << contours[c][k][1] << '\n';
    }
  }
}

}  // namespace hjmra
