#include "hjmra/grid.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace hjmra {

namespace {
constexpr int kMaxDim = 16;
}

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(std::vector<GridAxis> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > kMaxDim) throw GridError("grid must have 1..16 axes");
  spacing_.resize(axes_.size());
  strides_.resize(axes_.size());
  num_points_ = 1;
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    const GridAxis& a = axes_[i];
    if (!(a.lo < a.hi)) throw GridError("grid axis " + std::to_string(i) + ": lo must be below hi");
    if (a.count < 3) throw GridError("grid axis " + std::to_string(i) + ": count must be at least 3");
    spacing_[i] = a.spacing();
  }
  for (int i = dim() - 1; i >= 0; --i) {
    strides_[i] = num_points_;
    num_points_ *= static_cast<std::size_t>(axes_[i].count);
  }
}

void Grid::index(std::size_t flat, std::span<int> out) const {
  for (int i = 0; i < dim(); ++i) {
    out[i] = static_cast<int>(flat / strides_[i]);
    flat %= strides_[i];
  }
}

void Grid::coords(std::size_t flat, std::span<double> out) const {
  for (int i = 0; i < dim(); ++i) {
    const auto k = static_cast<int>(flat / strides_[i]);
    flat %= strides_[i];
    out[i] = axes_[i].lo + k * spacing_[i];
  }
}

std::size_t Grid::flat(std::span<const int> idx) const {
  std::size_t f = 0;
  for (int i = 0; i < dim(); ++i) f += static_cast<std::size_t>(idx[i]) * strides_[i];
  return f;
}

bool Grid::contains(std::span<const double> x, double tol) const {
  for (int i = 0; i < dim(); ++i) {
    if (axes_[i].periodic) continue;
    if (x[i] < axes_[i].lo - tol || x[i] > axes_[i].hi + tol) return false;
  }
  return true;
}

double Grid::diagonal() const {
  double s = 0.0;
  for (const auto& a : axes_) s += (a.hi - a.lo) * (a.hi - a.lo);
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// GridField

GridField::GridField(Grid grid, std::vector<double> times)
    : grid_(std::move(grid)), times_(std::move(times)) {
  if (times_.empty()) throw GridError("grid field needs at least one time stamp");
  if (!std::is_sorted(times_.begin(), times_.end()) ||
      std::adjacent_find(times_.begin(), times_.end()) != times_.end()) {
    throw GridError("grid field time stamps must be strictly ascending");
  }
  values_.assign(times_.size() * grid_.num_points(), 0.0);
}

GridField::GridField(Grid grid, std::vector<double> times, std::vector<double> values)
    : GridField(std::move(grid), std::move(times)) {
  if (values.size() != values_.size()) throw GridError("grid field value count mismatch");
  values_ = std::move(values);
}

std::span<double> GridField::slice(std::size_t k) {
  return {values_.data() + k * grid_.num_points(), grid_.num_points()};
}

std::span<const double> GridField::slice(std::size_t k) const {
  return {values_.data() + k * grid_.num_points(), grid_.num_points()};
}

int GridField::find_stamp(double t, double tol) const {
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (std::abs(times_[k] - t) <= tol) return static_cast<int>(k);
  }
  return -1;
}

void GridField::check_finite() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw GridError("non-finite value in grid field at slice " +
                      std::to_string(i / grid_.num_points()));
    }
  }
}

// ---------------------------------------------------------------------------
// Sampling

void sample_into(const ImplicitSet& set, const Grid& grid, double t, std::span<double> out) {
  if (set.dim() != grid.dim()) throw GridError("sample: set and grid dimensions differ");
  std::array<double, kMaxDim> x{};
  const std::span<double> xs(x.data(), grid.dim());
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    grid.coords(p, xs);
    out[p] = set.eval(xs, t);
  }
}

std::vector<double> sample(const ImplicitSet& set, const Grid& grid, double t) {
  std::vector<double> out(grid.num_points());
  sample_into(set, grid, t, out);
  return out;
}

// ---------------------------------------------------------------------------
// Interpolation

namespace {

struct AxisBracket {
  int k0 = 0;
  int k1 = 0;
  double w = 0.0;
};

// Locates x in the cell structure; returns true if clamping was needed.
bool bracket_axis(const GridAxis& a, double h, double x, AxisBracket& out) {
  if (a.periodic) {
    const double period = a.hi - a.lo;
    double s = std::fmod(x - a.lo, period);
    if (s < 0.0) s += period;
    s /= h;
    int k = static_cast<int>(std::floor(s));
    double w = s - k;
    if (k >= a.count) {
      k = a.count - 1;
      w = 1.0;
    }
    out.k0 = k;
    out.k1 = (k + 1) % a.count;
    out.w = w;
    return false;
  }
  bool clamped = false;
  double s = (x - a.lo) / h;
  const double last = a.count - 1;
  const double tol = 1e-9;
  if (s < 0.0) {
    clamped = s < -tol;
    s = 0.0;
  } else if (s > last) {
    clamped = s > last + tol;
    s = last;
  }
  int k = static_cast<int>(std::floor(s));
  if (k > a.count - 2) k = a.count - 2;
  out.k0 = k;
  out.k1 = k + 1;
  out.w = s - k;
  return clamped;
}

struct Cell {
  std::array<AxisBracket, kMaxDim> ax{};
  int n = 0;
  bool clamped = false;
};

Cell locate(const Grid& grid, std::span<const double> x) {
  Cell c;
  c.n = grid.dim();
  for (int i = 0; i < c.n; ++i) {
    c.clamped |= bracket_axis(grid.axis(i), grid.spacing(i), x[i], c.ax[i]);
  }
  return c;
}

// Calls fn(flat_index, weight) for each of the 2^n cell corners.
template <class Fn>
void for_each_corner(const Grid& grid, const Cell& c, Fn&& fn) {
  const unsigned corners = 1u << c.n;
  for (unsigned mask = 0; mask < corners; ++mask) {
    double w = 1.0;
    std::size_t flat = 0;
    for (int i = 0; i < c.n; ++i) {
      const bool hi = (mask >> i) & 1u;
      w *= hi ? c.ax[i].w : 1.0 - c.ax[i].w;
      flat += static_cast<std::size_t>(hi ? c.ax[i].k1 : c.ax[i].k0) * grid.stride(i);
    }
    if (w != 0.0) fn(flat, w);
  }
}

double interp_cell(const Grid& grid, const Cell& c, std::span<const double> slice) {
  double v = 0.0;
  for_each_corner(grid, c, [&](std::size_t flat, double w) { v += w * slice[flat]; });
  return v;
}

// Central difference at a node along one axis (one-sided at non-periodic edges).
double node_derivative(const Grid& grid, std::span<const double> slice, std::size_t flat, int axis) {
  const GridAxis& a = grid.axis(axis);
  const std::size_t stride = grid.stride(axis);
  const int k = static_cast<int>((flat / stride) % static_cast<std::size_t>(a.count));
  const double h = grid.spacing(axis);
  if (a.periodic) {
    const std::size_t base = flat - static_cast<std::size_t>(k) * stride;
    const std::size_t up = base + static_cast<std::size_t>((k + 1) % a.count) * stride;
    const std::size_t dn = base + static_cast<std::size_t>((k + a.count - 1) % a.count) * stride;
    return (slice[up] - slice[dn]) / (2.0 * h);
  }
  if (k == 0) return (slice[flat + stride] - slice[flat]) / h;
  if (k == a.count - 1) return (slice[flat] - slice[flat - stride]) / h;
  return (slice[flat + stride] - slice[flat - stride]) / (2.0 * h);
}

struct TimeBracket {
  std::size_t k0 = 0;
  std::size_t k1 = 0;
  double w = 0.0;
  bool clamped = false;
};

TimeBracket bracket_time(const std::vector<double>& times, double t) {
  TimeBracket b;
  if (times.size() == 1) {
    b.clamped = std::abs(t - times.front()) > 1e-9;
    return b;
  }
  const double tol = 1e-9;
  if (t < times.front()) {
    b.clamped = t < times.front() - tol;
    t = times.front();
  } else if (t > times.back()) {
    b.clamped = t > times.back() + tol;
    t = times.back();
  }
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t k1 = static_cast<std::size_t>(std::distance(times.begin(), it));
  if (k1 == 0) k1 = 1;
  if (k1 >= times.size()) k1 = times.size() - 1;
  b.k0 = k1 - 1;
  b.k1 = k1;
  b.w = (t - times[b.k0]) / (times[b.k1] - times[b.k0]);
  return b;
}

}  // namespace

InterpResult interpolate_slice(const Grid& grid, std::span<const double> slice,
                               std::span<const double> x) {
  const Cell c = locate(grid, x);
  return {interp_cell(grid, c, slice), c.clamped};
}

InterpResult interpolate(const GridField& field, std::span<const double> x, double t) {
  const Grid& grid = field.grid();
  const Cell c = locate(grid, x);
  const TimeBracket tb = bracket_time(field.times(), t);
  double v = interp_cell(grid, c, field.slice(tb.k0));
  if (tb.k1 != tb.k0 && tb.w != 0.0) {
    const double v1 = interp_cell(grid, c, field.slice(tb.k1));
    v = (1.0 - tb.w) * v + tb.w * v1;
  }
  return {v, c.clamped || tb.clamped};
}

void interpolate_time(const GridField& field, double t, std::span<double> out) {
  const TimeBracket tb = bracket_time(field.times(), t);
  const auto s0 = field.slice(tb.k0);
  if (tb.k0 == tb.k1 || tb.w == 0.0) {
    std::copy(s0.begin(), s0.end(), out.begin());
    return;
  }
  const auto s1 = field.slice(tb.k1);
  if (tb.w == 1.0) {
    std::copy(s1.begin(), s1.end(), out.begin());
    return;
  }
  for (std::size_t p = 0; p < s0.size(); ++p) out[p] = (1.0 - tb.w) * s0[p] + tb.w * s1[p];
}

GradientResult gradient(const GridField& field, std::span<const double> x, double t) {
  const Grid& grid = field.grid();
  const int n = grid.dim();
  const Cell c = locate(grid, x);
  const TimeBracket tb = bracket_time(field.times(), t);
  GradientResult r;
  r.dx.assign(n, 0.0);
  r.out_of_domain = c.clamped || tb.clamped;

  auto spatial = [&](std::span<const double> slice, double scale) {
    for_each_corner(grid, c, [&](std::size_t flat, double w) {
      for (int i = 0; i < n; ++i) r.dx[i] += scale * w * node_derivative(grid, slice, flat, i);
    });
  };

  if (tb.k0 == tb.k1) {
    spatial(field.slice(tb.k0), 1.0);
    r.single_slice = true;
    r.dt = 0.0;
    return r;
  }
  spatial(field.slice(tb.k0), 1.0 - tb.w);
  if (tb.w != 0.0) spatial(field.slice(tb.k1), tb.w);
  const double v0 = interp_cell(grid, c, field.slice(tb.k0));
  const double v1 = interp_cell(grid, c, field.slice(tb.k1));
  r.dt = (v1 - v0) / (field.times()[tb.k1] - field.times()[tb.k0]);
  return r;
}

UpwindPair upwind_derivatives(const Grid& grid, std::span<const double> slice, int axis) {
  const GridAxis& a = grid.axis(axis);
  const std::size_t stride = grid.stride(axis);
  const double h = grid.spacing(axis);
  const std::size_t np = grid.num_points();
  UpwindPair d{std::vector<double>(np), std::vector<double>(np)};
  for (std::size_t p = 0; p < np; ++p) {
    const int k = static_cast<int>((p / stride) % static_cast<std::size_t>(a.count));
    const std::size_t base = p - static_cast<std::size_t>(k) * stride;
    if (a.periodic) {
      const std::size_t up = base + static_cast<std::size_t>((k + 1) % a.count) * stride;
      const std::size_t dn = base + static_cast<std::size_t>((k + a.count - 1) % a.count) * stride;
      d.minus[p] = (slice[p] - slice[dn]) / h;
      d.plus[p] = (slice[up] - slice[p]) / h;
      continue;
    }
    const bool has_dn = k > 0;
    const bool has_up = k < a.count - 1;
    const double dm = has_dn ? (slice[p] - slice[p - stride]) / h : 0.0;
    const double dp = has_up ? (slice[p + stride] - slice[p]) / h : 0.0;
    d.minus[p] = has_dn ? dm : dp;
    d.plus[p] = has_up ? dp : dm;
  }
  return d;
}

// ---------------------------------------------------------------------------
// MRAV binary format

namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void raw(const char* s, std::size_t n) { buf_.insert(buf_.end(), s, s + n); }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  void expect_magic(const char* m) {
    need(4);
    if (std::memcmp(b_.data() + pos_, m, 4) != 0) throw GridError("not an MRAV value file (bad magic)");
    pos_ += 4;
  }
  bool at_end() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw GridError("truncated MRAV value file");
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_field(const GridField& field) {
  ByteWriter w;
  w.raw("MRAV", 4);
  w.u32(kMravVersion);
  const Grid& g = field.grid();
  w.u32(static_cast<std::uint32_t>(g.dim()));
  for (const GridAxis& a : g.axes()) {
    w.f64(a.lo);
    w.f64(a.hi);
    w.u32(static_cast<std::uint32_t>(a.count));
    w.u8(a.periodic ? 1 : 0);
  }
  w.u32(static_cast<std::uint32_t>(field.times().size()));
  for (double t : field.times()) w.f64(t);
  for (double v : field.values()) w.f64(v);
  return w.take();
}

GridField decode_field(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic("MRAV");
  const std::uint32_t version = r.u32();
  if (version != kMravVersion) throw GridError("unsupported MRAV version " + std::to_string(version));
  const std::uint32_t n = r.u32();
  if (n == 0 || n > kMaxDim) throw GridError("MRAV: invalid dimension");
  std::vector<GridAxis> axes(n);
  for (auto& a : axes) {
    a.lo = r.f64();
    a.hi = r.f64();
    a.count = static_cast<int>(r.u32());
    a.periodic = r.u8() != 0;
  }
  Grid grid(std::move(axes));
  const std::uint32_t nt = r.u32();
  std::vector<double> times(nt);
  for (auto& t : times) t = r.f64();
  std::vector<double> values(static_cast<std::size_t>(nt) * grid.num_points());
  for (auto& v : values) v = r.f64();
  if (!r.at_end()) throw GridError("MRAV: trailing bytes after value table");
  return GridField(std::move(grid), std::move(times), std::move(values));
}

void write_field(const GridField& field, const std::filesystem::path& path) {
  const auto bytes = encode_field(field);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

GridField read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_field(bytes);
}

}  // namespace hjmra
