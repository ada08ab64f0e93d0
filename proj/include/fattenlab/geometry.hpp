#pragma once

#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include "fattenlab/grid.hpp"

namespace fattenlab {

// ---------------------------------------------------------------------------
// Shapes. The enclosed region is Omega; signed distance is positive inside.

struct Circle {
  Point2 center = Point2::Zero();
  double radius = 0.4;
};

/// Two circles of radius R centred at (+-R, 0), tangent at the origin.
/// Omega is the union of the two open disks.
struct FigureEight {
  double radius = 0.3;
};

/// Koch snowflake of the given refinement level built on an equilateral
/// triangle of side `side`, centred at its centroid: 3 * 4^k segments.
struct KochFlake {
  int iterations = 4;
  double side = 1.0;
  Point2 center = Point2::Zero();
};

/// Closed polygon (last vertex connects back to the first).
struct Polyline {
  std::vector<Point2> vertices;
};

struct Sphere {
  Point center = Point::Zero();
  double radius = 0.4;
};

using ShapeSpec = std::variant<Circle, FigureEight, KochFlake, Polyline, Sphere>;

/// Spatial dimension a shape lives in.
int shape_dim(const ShapeSpec& shape);

/// Axis-aligned bounds of the shape (z ignored in 2-D).
std::pair<Point, Point> shape_bounds(const ShapeSpec& shape);

/// Unclamped signed distance at one point, by direct evaluation.
double signed_distance_at(const ShapeSpec& shape, const Point& x);

/// Signed distance d(., M) sampled on a grid and saturated at +-clamp.
struct SignedDistanceField {
  Field field;
  double clamp = 0.0;
  ShapeSpec shape;

  const Grid& grid() const { return field.grid(); }
};

/// Distance between the shape's bounding box and the box edges.
double shape_margin(const ShapeSpec& shape, const Grid& grid);

/// 40% of the shape margin.
double default_clamp(const ShapeSpec& shape, const Grid& grid);

SignedDistanceField signed_distance(const ShapeSpec& shape, const Grid& grid,
                                    std::optional<double> clamp = std::nullopt);

enum class LeafSampling {
  Nodal,        ///< +1 where d >= s, -1 elsewhere
  CellAverage,  ///< 2 clamp((d - s)/h + 1/2, 0, 1) - 1, continuous in s
};

/// Indicator data 2 chi_{M_s} - 1 of the leaf {d > s}. Nodal sampling is
/// piecewise constant in s; the cell average makes the family continuous.
Field leaf_initial_data(const SignedDistanceField& sdf, double s, LeafSampling sampling = LeafSampling::Nodal);

/// Vertices of the Koch snowflake polygon, counter-clockwise.
std::vector<Point2> koch_vertices(const KochFlake& flake);

/// Fractal excess kappa = log 4 / log 3 - 1 of the Koch curve.
double koch_kappa();

// ---------------------------------------------------------------------------
// Contours.

struct ContourLine {
  std::vector<Point2> points;
  bool closed = false;

  double length() const;
};

struct Contour {
  std::vector<ContourLine> lines;
  double level = 0.0;
  double time = 0.0;

  bool empty() const { return lines.empty(); }
  double length() const;
  std::size_t vertex_count() const;
};

/// Marching squares on a 2-D field. Saddle cells connect the two corners on
/// the side of `level` that the cell average lies on (average >= level joins
/// the corners with value >= level).
Contour contour_extract(const Field& f, double level);

/// Total length of the level set {d = r}.
double level_set_measure(const SignedDistanceField& sdf, double r);

/// max over sampled points of `from` of the distance to `to`; sampling step <= step.
double directed_hausdorff(const Contour& from, const Contour& to, double step);

/// Symmetric Hausdorff distance between two non-empty contours.
double hausdorff_distance(const Contour& a, const Contour& b, double step);

/// Distance from a point to the nearest contour segment.
double distance_to_contour(const Contour& c, const Point2& p);

/// Least-squares slope of log N(size) against log(1/size), where N counts
/// boxes of the given sizes met by the closed polyline.
double box_counting_dimension(const std::vector<Point2>& closed_polyline, const std::vector<double>& sizes);

/// Length of the closed polyline inside the disk B(center, radius).
double length_in_ball(const std::vector<Point2>& closed_polyline, const Point2& center, double radius);

/// Writes "x,y" records, one per vertex, with a "# line <i> closed|open" header per polyline.
void write_contour(const std::filesystem::path& path, const Contour& c);

}  // namespace fattenlab
