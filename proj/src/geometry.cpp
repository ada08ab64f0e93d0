#include "fattenlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fattenlab/parallel.hpp"

namespace fattenlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

/// Even-odd containment test.
bool inside_polygon(const std::vector<Point2>& poly, const Point2& p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = poly[i];
    const Point2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

const std::vector<Point2>& polygon_of(const ShapeSpec& shape, std::vector<Point2>& storage) {
  if (const auto* k = std::get_if<KochFlake>(&shape)) {
    storage = koch_vertices(*k);
    return storage;
  }
  return std::get<Polyline>(shape).vertices;
}

void validate_shape(const ShapeSpec& shape) {
  std::visit(overloaded{
                 [](const Circle& c) { require(c.radius > 0.0, "circle radius must be positive"); },
                 [](const FigureEight& f) { require(f.radius > 0.0, "figure-eight radius must be positive"); },
                 [](const KochFlake& k) {
                   require(k.iterations >= 0, "Koch iterations must be >= 0");
                   require(k.side > 0.0, "Koch side must be positive");
                 },
                 [](const Polyline& p) { require(p.vertices.size() >= 3, "polyline needs at least 3 vertices"); },
                 [](const Sphere& s) { require(s.radius > 0.0, "sphere radius must be positive"); },
             },
             shape);
}

/// Polygon signed distance on the grid: unsigned distance by per-segment
/// bounding-box sweeps limited to the clamp band, sign by scanline parity.
void polygon_distance(const std::vector<Point2>& poly, double clamp, Field& out) {
  const Grid& g = out.grid();
  const Index p = g.points();
  const double h = g.spacing();
  auto& v = out.values();
  v.setConstant(clamp);
  const std::size_t n = poly.size();
  auto node_range = [&](int axis, double lo, double hi) {
    const Index i0 = std::max<Index>(0, static_cast<Index>(std::floor((lo - g.lo(axis)) / h - 0.5)));
    const Index i1 = std::min<Index>(p - 1, static_cast<Index>(std::ceil((hi - g.lo(axis)) / h - 0.5)));
    return std::pair{i0, i1};
  };
  for (std::size_t s = 0; s < n; ++s) {
    const Point2& a = poly[s];
    const Point2& b = poly[(s + 1) % n];
    const auto [i0, i1] = node_range(0, std::min(a.x(), b.x()) - clamp, std::max(a.x(), b.x()) + clamp);
    const auto [j0, j1] = node_range(1, std::min(a.y(), b.y()) - clamp, std::max(a.y(), b.y()) + clamp);
    for (Index j = j0; j <= j1; ++j)
      for (Index i = i0; i <= i1; ++i) {
        const Point2 x(g.coord(0, i), g.coord(1, j));
        const Index k = g.index(i, j);
        v[k] = std::min(v[k], segment_distance(x, a, b));
      }
  }
  parallel_for(p, [&](Index jb, Index je) {
    std::vector<double> xs;
    for (Index j = jb; j < je; ++j) {
      const double y = g.coord(1, j);
      xs.clear();
      for (std::size_t i = 0, k = n - 1; i < n; k = i++) {
        const Point2& a = poly[i];
        const Point2& b = poly[k];
        if ((a.y() > y) != (b.y() > y)) xs.push_back(a.x() + (y - a.y()) * (b.x() - a.x()) / (b.y() - a.y()));
      }
      std::sort(xs.begin(), xs.end());
      // nodes with an odd number of crossings to their left are inside
      std::size_t c = 0;
      for (Index i = 0; i < p; ++i) {
        const double x = g.coord(0, i);
        while (c < xs.size() && xs[c] <= x) ++c;
        const Index k = g.index(i, j);
        if (c % 2 == 0) v[k] = -v[k];
      }
    }
  });
}

}  // namespace

int shape_dim(const ShapeSpec& shape) { return std::holds_alternative<Sphere>(shape) ? 3 : 2; }

std::pair<Point, Point> shape_bounds(const ShapeSpec& shape) {
  return std::visit(
      overloaded{
          [](const Circle& c) {
            return std::pair{Point(c.center.x() - c.radius, c.center.y() - c.radius, 0.0),
                             Point(c.center.x() + c.radius, c.center.y() + c.radius, 0.0)};
          },
          [](const FigureEight& f) {
            return std::pair{Point(-2 * f.radius, -f.radius, 0.0), Point(2 * f.radius, f.radius, 0.0)};
          },
          [](const Sphere& s) {
            return std::pair{Point(s.center.array() - s.radius), Point(s.center.array() + s.radius)};
          },
          [&](const auto&) {
            std::vector<Point2> storage;
            const auto& poly = polygon_of(shape, storage);
            Point lo(poly[0].x(), poly[0].y(), 0.0), hi = lo;
            for (const auto& q : poly) {
              lo.x() = std::min(lo.x(), q.x());
              lo.y() = std::min(lo.y(), q.y());
              hi.x() = std::max(hi.x(), q.x());
              hi.y() = std::max(hi.y(), q.y());
            }
            return std::pair{lo, hi};
          },
      },
      shape);
}

double signed_distance_at(const ShapeSpec& shape, const Point& x) {
  const Point2 x2 = x.head<2>();
  return std::visit(overloaded{
                        [&](const Circle& c) { return c.radius - (x2 - c.center).norm(); },
                        [&](const Sphere& s) { return s.radius - (x - s.center).norm(); },
                        [&](const FigureEight& f) {
                          const double r1 = (x2 - Point2(-f.radius, 0.0)).norm();
                          const double r2 = (x2 - Point2(f.radius, 0.0)).norm();
                          const double dist = std::min(std::abs(r1 - f.radius), std::abs(r2 - f.radius));
                          const bool inside = r1 < f.radius || r2 < f.radius;
                          return inside ? dist : -dist;
                        },
                        [&](const auto&) {
                          std::vector<Point2> storage;
                          const auto& poly = polygon_of(shape, storage);
                          double dist = std::numeric_limits<double>::infinity();
                          for (std::size_t i = 0; i < poly.size(); ++i)
                            dist = std::min(dist, segment_distance(x2, poly[i], poly[(i + 1) % poly.size()]));
                          return inside_polygon(poly, x2) ? dist : -dist;
                        },
                    },
                    shape);
}

double shape_margin(const ShapeSpec& shape, const Grid& grid) {
  const auto [lo, hi] = shape_bounds(shape);
  double margin = std::numeric_limits<double>::infinity();
  for (int a = 0; a < grid.dim(); ++a) {
    margin = std::min(margin, lo[a] - grid.lo(a));
    margin = std::min(margin, grid.hi(a) - hi[a]);
  }
  return margin;
}

double default_clamp(const ShapeSpec& shape, const Grid& grid) { return 0.4 * shape_margin(shape, grid); }

SignedDistanceField signed_distance(const ShapeSpec& shape, const Grid& grid, std::optional<double> clamp) {
  validate_shape(shape);
  require(shape_dim(shape) == grid.dim(), "shape dimension does not match grid dimension");
  const double margin = shape_margin(shape, grid);
  require(margin > 0.0, "shape touches the box boundary");
  const double d_max = clamp.value_or(0.4 * margin);
  require(d_max > 0.0, "distance clamp must be positive");
  require(d_max <= margin, "distance clamp exceeds the shape margin");

  Field field(grid, 0.0, 0.0);
  if (std::holds_alternative<KochFlake>(shape) || std::holds_alternative<Polyline>(shape)) {
    std::vector<Point2> storage;
    polygon_distance(polygon_of(shape, storage), d_max, field);
  } else {
    parallel_for(grid.size(), [&](Index b, Index e) {
      for (Index n = b; n < e; ++n) field[n] = std::clamp(signed_distance_at(shape, grid.node(n)), -d_max, d_max);
    });
  }
  return {std::move(field), d_max, shape};
}

Field leaf_initial_data(const SignedDistanceField& sdf, double s, LeafSampling sampling) {
  require(std::abs(s) < sdf.clamp, "leaf parameter |s| must be below the distance clamp");
  Field u(sdf.grid(), -1.0, 0.0);
  if (sampling == LeafSampling::Nodal) {
    u.values() = (sdf.field.values() >= s).select(1.0, u.values());
  } else {
    const double h = sdf.grid().spacing();
    u.values() = 2.0 * ((sdf.field.values() - s) / h + 0.5).max(0.0).min(1.0) - 1.0;
  }
  return u;
}

std::vector<Point2> koch_vertices(const KochFlake& flake) {
  const double rc = flake.side / std::sqrt(3.0);
  std::vector<Point2> poly;
  for (int i = 0; i < 3; ++i) {
    const double a = std::numbers::pi / 2 + 2.0 * std::numbers::pi * i / 3.0;
    poly.emplace_back(flake.center + rc * Point2(std::cos(a), std::sin(a)));
  }
  const double bump = std::sqrt(3.0) / 6.0;
  for (int it = 0; it < flake.iterations; ++it) {
    std::vector<Point2> next;
    next.reserve(poly.size() * 4);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Point2 a = poly[i];
      const Point2 b = poly[(i + 1) % poly.size()];
      const Point2 d = b - a;
      const Point2 outward(d.y(), -d.x());  // right of travel on a CCW polygon
      next.push_back(a);
      next.push_back(a + d / 3.0);
      next.push_back(a + d / 2.0 + bump * outward);
      next.push_back(a + 2.0 * d / 3.0);
    }
    poly = std::move(next);
  }
  return poly;
}

double koch_kappa() { return std::log(4.0) / std::log(3.0) - 1.0; }

double box_counting_dimension(const std::vector<Point2>& poly, const std::vector<double>& sizes) {
  require(sizes.size() >= 2, "box counting needs at least two sizes");
  std::vector<double> xs, ys;
  for (double size : sizes) {
    require(size > 0.0, "box size must be positive");
    std::vector<std::pair<long long, long long>> boxes;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Point2 a = poly[i];
      const Point2 b = poly[(i + 1) % poly.size()];
      const int steps = std::max(1, static_cast<int>(std::ceil((b - a).norm() / (0.25 * size))));
      for (int s = 0; s <= steps; ++s) {
        const Point2 q = a + (b - a) * (static_cast<double>(s) / steps);
        boxes.emplace_back(static_cast<long long>(std::floor(q.x() / size)),
                           static_cast<long long>(std::floor(q.y() / size)));
      }
    }
    std::sort(boxes.begin(), boxes.end());
    boxes.erase(std::unique(boxes.begin(), boxes.end()), boxes.end());
    xs.push_back(std::log(1.0 / size));
    ys.push_back(std::log(static_cast<double>(boxes.size())));
  }
  const Eigen::Map<const Eigen::ArrayXd> X(xs.data(), static_cast<Eigen::Index>(xs.size()));
  const Eigen::Map<const Eigen::ArrayXd> Y(ys.data(), static_cast<Eigen::Index>(ys.size()));
  const double mx = X.mean(), my = Y.mean();
  return ((X - mx) * (Y - my)).sum() / (X - mx).square().sum();
}

double length_in_ball(const std::vector<Point2>& poly, const Point2& center, double radius) {
  double total = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2 a = poly[i] - center;
    const Point2 d = poly[(i + 1) % poly.size()] - poly[i];
    // |a + t d|^2 = r^2 on t in [0, 1]
    const double A = d.squaredNorm();
    if (A == 0.0) continue;
    const double B = 2.0 * a.dot(d);
    const double C = a.squaredNorm() - radius * radius;
    const double disc = B * B - 4.0 * A * C;
    if (disc <= 0.0) continue;
    const double sq = std::sqrt(disc);
    const double t0 = std::max(0.0, (-B - sq) / (2.0 * A));
    const double t1 = std::min(1.0, (-B + sq) / (2.0 * A));
    if (t1 > t0) total += (t1 - t0) * std::sqrt(A);
  }
  return total;
}

}  // namespace fattenlab
