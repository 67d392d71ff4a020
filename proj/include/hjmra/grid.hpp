#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjmra/implicit_set.hpp"

namespace hjmra {

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  int count = 3;
  bool periodic = false;

  /// (hi - lo) / (count - 1), or (hi - lo) / count for periodic axes.
  double spacing() const { return periodic ? (hi - lo) / count : (hi - lo) / (count - 1); }
  double node(int k) const { return lo + k * spacing(); }

  bool operator==(const GridAxis&) const = default;
};

/// Uniform rectangular grid, row-major with the last axis fastest.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<GridAxis> axes);

  int dim() const { return static_cast<int>(axes_.size()); }
  std::size_t num_points() const { return num_points_; }
  const std::vector<GridAxis>& axes() const { return axes_; }
  const GridAxis& axis(int i) const { return axes_[i]; }
  double spacing(int i) const { return spacing_[i]; }
  std::size_t stride(int i) const { return strides_[i]; }

  /// Node coordinates of a flat index.
  void coords(std::size_t flat, std::span<double> out) const;
  /// Per-axis integer index of a flat index.
  void index(std::size_t flat, std::span<int> out) const;
  std::size_t flat(std::span<const int> idx) const;

  /// True when x lies inside the box on every non-periodic axis.
  bool contains(std::span<const double> x, double tol = 1e-12) const;
  /// Diagonal length of the box.
  double diagonal() const;

  bool operator==(const Grid& o) const { return axes_ == o.axes_; }

 private:
  std::vector<GridAxis> axes_;
  std::vector<double> spacing_;
  std::vector<std::size_t> strides_;
  std::size_t num_points_ = 0;
};

struct InterpResult {
  double value = 0.0;
  bool out_of_domain = false;
};

struct GradientResult {
  std::vector<double> dx;
  double dt = 0.0;
  bool out_of_domain = false;
  /// Set when the field holds one slice and dt is reported as zero.
  bool single_slice = false;
};

/// Scalar field sampled on a grid at ascending time stamps.
class GridField {
 public:
  GridField() = default;
  GridField(Grid grid, std::vector<double> times);
  GridField(Grid grid, std::vector<double> times, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t num_slices() const { return times_.size(); }

  std::span<double> slice(std::size_t k);
  std::span<const double> slice(std::size_t k) const;

  /// Index of the stored stamp equal to t within tol, or -1.
  int find_stamp(double t, double tol = 1e-9) const;

  /// Throws GridError if any value is NaN or Inf.
  void check_finite() const;

  bool operator==(const GridField& o) const = default;

 private:
  Grid grid_;
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Evaluates the set at every node at time t.
std::vector<double> sample(const ImplicitSet& set, const Grid& grid, double t);
void sample_into(const ImplicitSet& set, const Grid& grid, double t, std::span<double> out);

/// Multilinear in space, linear in time. Out-of-box queries are clamped and flagged.
InterpResult interpolate(const GridField& field, std::span<const double> x, double t);
/// Spatial interpolation of one slice.
InterpResult interpolate_slice(const Grid& grid, std::span<const double> slice,
                               std::span<const double> x);

/// Nodewise linear-in-time slice at t (clamped to the stored span).
void interpolate_time(const GridField& field, double t, std::span<double> out);

/// Spatial gradient from interpolated central-difference node gradients and a
/// forward time difference between the bracketing slices.
GradientResult gradient(const GridField& field, std::span<const double> x, double t);

struct UpwindPair {
  std::vector<double> minus;
  std::vector<double> plus;
};

/// First-order one-sided differences along one axis. Non-periodic boundary
/// nodes copy the available one-sided difference.
UpwindPair upwind_derivatives(const Grid& grid, std::span<const double> slice, int axis);

// Binary value-function format ("MRAV", little-endian).
inline constexpr std::uint32_t kMravVersion = 1;
void write_field(const GridField& field, const std::filesystem::path& path);
GridField read_field(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_field(const GridField& field);
GridField decode_field(std::span<const std::uint8_t> bytes);

}  // namespace hjmra
