#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "fattenlab/error.hpp"

namespace fattenlab {

using Index = std::int64_t;
using Point = Eigen::Vector3d;
using Point2 = Eigen::Vector2d;

enum class BoundaryKind { FarFieldConstant, Periodic };

/// Outer boundary of the computational box for phase-field quantities.
struct Boundary {
  BoundaryKind kind = BoundaryKind::FarFieldConstant;
  double value = -1.0;

  static Boundary far_field(double value) { return {BoundaryKind::FarFieldConstant, value}; }
  static Boundary periodic() { return {BoundaryKind::Periodic, 0.0}; }

  bool operator==(const Boundary&) const = default;
};

/// Uniform Cartesian grid with cell-centred nodes.
///
/// Every axis spans [lo, lo + length) with `points` nodes at lo + (i + 1/2) h,
/// h = length / points. Cell-centred nodes make boxes symmetric about the
/// origin invariant under the reflections x -> -x.
class Grid {
 public:
  Grid() = default;

  Grid(int dim, const Point& lo, double length, int points, Boundary boundary = {})
      : dim_(dim), lo_(lo), length_(length), points_(points), boundary_(boundary) {
    require(dim == 2 || dim == 3, "grid dimension must be 2 or 3");
    require(points >= 16, "points_per_axis must be at least 16");
    require(std::isfinite(length) && length > 0.0, "grid extent must be positive");
    require(boundary.kind == BoundaryKind::Periodic || boundary.value == 1.0 || boundary.value == -1.0,
            "far-field constant must be +1 or -1");
    if (dim == 2) lo_.z() = 0.0;
    h_ = length / points;
  }

  /// Box [lo, hi]^dim.
  static Grid box(int dim, double lo, double hi, int points, Boundary boundary = {}) {
    require(hi > lo, "extent_hi must exceed extent_lo");
    return Grid(dim, Point::Constant(lo), hi - lo, points, boundary);
  }

  int dim() const { return dim_; }
  int points() const { return points_; }
  double spacing() const { return h_; }
  double length() const { return length_; }
  const Boundary& boundary() const { return boundary_; }
  bool periodic() const { return boundary_.kind == BoundaryKind::Periodic; }

  double lo(int axis) const { return lo_[axis]; }
  double hi(int axis) const { return lo_[axis] + length_; }
  const Point& lo() const { return lo_; }

  Index size() const {
    Index n = 1;
    for (int a = 0; a < dim_; ++a) n *= points_;
    return n;
  }
  /// Number of x-rows (lines of nodes along axis 0).
  Index rows() const { return size() / points_; }
  Index stride(int axis) const {
    Index s = 1;
    for (int a = 0; a < axis; ++a) s *= points_;
    return s;
  }
  double cell_volume() const { return std::pow(h_, dim_); }

  double coord(int axis, Index i) const { return lo_[axis] + (static_cast<double>(i) + 0.5) * h_; }

  Index index(Index i, Index j, Index k = 0) const { return i + points_ * (j + points_ * k); }

  std::array<Index, 3> unravel(Index n) const {
    const Index p = points_;
    return {n % p, (n / p) % p, dim_ == 3 ? n / (p * p) : 0};
  }

  Point node(Index n) const {
    const auto ijk = unravel(n);
    Point x = Point::Zero();
    for (int a = 0; a < dim_; ++a) x[a] = coord(a, ijk[static_cast<std::size_t>(a)]);
    return x;
  }

  bool contains(const Point& p) const {
    for (int a = 0; a < dim_; ++a)
      if (!(p[a] >= lo(a) && p[a] <= hi(a))) return false;
    return true;
  }

  bool operator==(const Grid& o) const {
    return dim_ == o.dim_ && points_ == o.points_ && length_ == o.length_ && lo_ == o.lo_ &&
           boundary_ == o.boundary_;
  }

 private:
  int dim_ = 2;
  Point lo_ = Point::Zero();
  double length_ = 1.0;
  int points_ = 16;
  double h_ = 1.0 / 16;
  Boundary boundary_{};
};

/// How a field is continued beyond the box by stencils and convolutions.
struct Extension {
  enum class Kind { Constant, Linear, Periodic };
  Kind kind = Kind::Constant;
  double value = 0.0;

  static Extension constant(double v) { return {Kind::Constant, v}; }
  static Extension linear() { return {Kind::Linear, 0.0}; }
  static Extension periodic() { return {Kind::Periodic, 0.0}; }

  /// Policy for u-like fields: the grid's far-field constant, or wrap.
  static Extension phase_field(const Grid& g) {
    return g.periodic() ? periodic() : constant(g.boundary().value);
  }
  /// Policy for distance-like fields: linear continuation, or wrap.
  static Extension distance(const Grid& g) { return g.periodic() ? periodic() : linear(); }
};

/// Nodal values of one scalar quantity on a grid at one time.
template <typename Scalar = double>
class ScalarField {
 public:
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  ScalarField() = default;
  explicit ScalarField(const Grid& grid, Scalar fill = Scalar(0), double time = 0.0)
      : grid_(grid), values_(Values::Constant(grid.size(), fill)), time_(time) {}
  ScalarField(const Grid& grid, Values values, double time = 0.0)
      : grid_(grid), values_(std::move(values)), time_(time) {
    require(values_.size() == grid_.size(), "field value count must equal grid node count");
  }

  /// Field with values fn(node position).
  template <typename Fn>
  static ScalarField from_function(const Grid& grid, Fn&& fn, double time = 0.0) {
    ScalarField f(grid, Scalar(0), time);
    for (Index n = 0; n < grid.size(); ++n) f.values_[n] = static_cast<Scalar>(fn(grid.node(n)));
    return f;
  }

  const Grid& grid() const { return grid_; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  Values& values() { return values_; }
  const Values& values() const { return values_; }
  Scalar* data() { return values_.data(); }
  const Scalar* data() const { return values_.data(); }
  Index size() const { return values_.size(); }

  Scalar& operator[](Index n) { return values_[n]; }
  Scalar operator[](Index n) const { return values_[n]; }
  Scalar& at(Index i, Index j, Index k = 0) { return values_[grid_.index(i, j, k)]; }
  Scalar at(Index i, Index j, Index k = 0) const { return values_[grid_.index(i, j, k)]; }

  bool all_finite() const { return values_.isFinite().all(); }
  Scalar max_abs() const { return values_.abs().maxCoeff(); }

 private:
  Grid grid_{};
  Values values_{};
  double time_ = 0.0;
};

using Field = ScalarField<double>;

inline void require_same_grid(const Grid& a, const Grid& b) { require(a == b, "mismatched grid"); }

}  // namespace fattenlab
