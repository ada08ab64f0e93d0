#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fattenlab/geometry.hpp"
#include "fattenlab/kernels.hpp"

using namespace fattenlab;

namespace {

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

Contour circle_contour(double radius, double dx, const Grid& g) {
  const Field f = Field::from_function(g, [&](const Point& x) { return std::hypot(x.x() - dx, x.y()) - radius; });
  return contour_extract(f, 0.0);
}

}  // namespace

TEST_CASE("signed distance values and sign convention") {
  const Grid g = Grid::box(2, -1.0, 1.0, 128);
  CHECK(signed_distance_at(Circle{Point2::Zero(), 0.4}, Point::Zero()) == doctest::Approx(0.4));
  CHECK(signed_distance_at(FigureEight{0.3}, Point::Zero()) == 0.0);
  CHECK(signed_distance_at(FigureEight{0.3}, Point(0.3, 0.0, 0.0)) == doctest::Approx(0.3));
  CHECK(signed_distance_at(FigureEight{0.3}, Point(0.0, 0.1, 0.0)) < 0.0);

  const KochFlake tri{0, 1.0, Point2::Zero()};
  const auto v = koch_vertices(tri);
  REQUIRE(v.size() == 3);
  double perimeter = 0.0;
  for (std::size_t i = 0; i < 3; ++i) perimeter += (v[(i + 1) % 3] - v[i]).norm();
  CHECK(perimeter == doctest::Approx(3.0));
  CHECK(signed_distance_at(tri, Point::Zero()) == doctest::Approx(1.0 / (2.0 * std::sqrt(3.0))));
  CHECK(koch_vertices(KochFlake{4, 1.0, Point2::Zero()}).size() == 3 * 256);

  const SignedDistanceField sdf = signed_distance(Circle{Point2::Zero(), 0.4}, g);
  CHECK(sdf.clamp == doctest::Approx(0.4 * 0.6));
  CHECK(sdf.field.values().maxCoeff() <= sdf.clamp);
  CHECK(sdf.field.values().minCoeff() >= -sdf.clamp);
}

TEST_CASE("grid polygon distance matches direct evaluation") {
  const Grid g = Grid::box(2, -1.0, 1.0, 96);
  const KochFlake flake{2, 1.0, Point2(0.05, -0.02)};
  const SignedDistanceField sdf = signed_distance(flake, g);
  double worst = 0.0;
  for (Index n = 0; n < g.size(); ++n) {
    const double exact = std::clamp(signed_distance_at(flake, g.node(n)), -sdf.clamp, sdf.clamp);
    worst = std::max(worst, std::abs(exact - sdf.field[n]));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("signed distance is eikonal away from the medial axis") {
  const Grid g = Grid::box(2, -1.0, 1.0, 200);
  const double h = g.spacing();
  for (const ShapeSpec& shape : {ShapeSpec{Circle{Point2::Zero(), 0.4}}, ShapeSpec{FigureEight{0.3}}}) {
    const SignedDistanceField sdf = signed_distance(shape, g);
    const Field grad2 = gradient_norm_sq(sdf.field, Extension::linear());
    Index checked = 0, good = 0;
    for (Index n = 0; n < g.size(); ++n) {
      const Point x = g.node(n);
      if (std::abs(sdf.field[n]) > sdf.clamp - 2 * h) continue;
      // medial axes: circle centres and the y axis of the figure eight
      if (std::holds_alternative<Circle>(shape) && x.norm() < 3 * h) continue;
      if (std::holds_alternative<FigureEight>(shape) &&
          (std::abs(x.x()) < 3 * h || (x.head<2>() - Point2(0.3, 0)).norm() < 3 * h ||
           (x.head<2>() + Point2(0.3, 0)).norm() < 3 * h))
        continue;
      ++checked;
      const double m = std::sqrt(grad2[n]);
      if (m >= 1 - 3 * h && m <= 1 + 3 * h) ++good;
    }
    CHECK(checked > 1000);
    CHECK(static_cast<double>(good) >= 0.99 * static_cast<double>(checked));
  }
}

TEST_CASE("signed distance rejects bad placements") {
  const Grid g = Grid::box(2, -1.0, 1.0, 64);
  CHECK_THROWS_AS(signed_distance(Circle{Point2(0.8, 0.0), 0.4}, g), ValidationError);
  CHECK_THROWS_AS(signed_distance(Circle{Point2::Zero(), 0.4}, g, 0.7), ValidationError);
  CHECK_THROWS_AS(signed_distance(Sphere{}, g), ValidationError);
  CHECK_THROWS_AS(signed_distance(Circle{Point2::Zero(), -1.0}, g), ValidationError);
  const Grid g3 = Grid::box(3, -1.0, 1.0, 24);
  const SignedDistanceField s3 = signed_distance(Sphere{Point::Zero(), 0.5}, g3);
  CHECK(s3.field.values().maxCoeff() == doctest::Approx(s3.clamp));
}

TEST_CASE("leaf initial data") {
  const Grid g = Grid::box(2, -1.0, 1.0, 128);
  const SignedDistanceField sdf = signed_distance(Circle{Point2::Zero(), 0.4}, g);
  const Field u0 = leaf_initial_data(sdf, 0.0);
  const Field u1 = leaf_initial_data(sdf, 0.1);
  for (Index n = 0; n < g.size(); ++n) {
    const double r = g.node(n).norm();
    REQUIRE((u0[n] == 1.0 || u0[n] == -1.0));
    REQUIRE(u0[n] == (r <= 0.4 ? 1.0 : -1.0));
    REQUIRE(u1[n] == (r <= 0.3 ? 1.0 : -1.0));
  }
  CHECK_THROWS_AS(leaf_initial_data(sdf, sdf.clamp), ValidationError);

  const SignedDistanceField fig = signed_distance(FigureEight{0.3}, g);
  for (double s1 : {-0.1, -0.03, 0.0, 0.02}) {
    const Field a = leaf_initial_data(fig, s1);
    const Field b = leaf_initial_data(fig, s1 + 0.037);
    CHECK((b.values() <= a.values()).all());
  }
}

TEST_CASE("cell-averaged leaf data") {
  const Grid g = Grid::box(2, -1.0, 1.0, 128);
  const double h = g.spacing();
  const SignedDistanceField fig = signed_distance(FigureEight{0.3}, g);
  const Field a = leaf_initial_data(fig, 0.02, LeafSampling::CellAverage);
  for (Index n = 0; n < g.size(); ++n) {
    const double d = fig.field[n] - 0.02;
    if (d >= h / 2) REQUIRE(a[n] == 1.0);
    if (d <= -h / 2) REQUIRE(a[n] == -1.0);
    if (std::abs(d) < h / 2) REQUIRE(a[n] == doctest::Approx(2 * d / h));
  }
  // continuous and non-increasing in s
  const Field b = leaf_initial_data(fig, 0.02 + 1e-9, LeafSampling::CellAverage);
  CHECK((b.values() <= a.values()).all());
  CHECK((a.values() - b.values()).maxCoeff() <= 2e-9 / h + 1e-12);
}

TEST_CASE("contour extraction") {
  SUBCASE("circle length") {
    const Grid g = Grid::box(2, -1.0, 1.0, 256);
    REQUIRE(g.spacing() <= 0.4 / 50);
    const Contour c = circle_contour(0.4, 0.0, g);
    REQUIRE(c.lines.size() == 1);
    CHECK(c.lines[0].closed);
    CHECK(c.length() == doctest::Approx(2 * std::numbers::pi * 0.4).epsilon(0.02));
    const double h = g.spacing();
    for (const auto& l : c.lines)
      for (std::size_t i = 0; i + 1 < l.points.size(); ++i) CHECK((l.points[i + 1] - l.points[i]).norm() < 2 * h);
  }
  SUBCASE("constant field") {
    const Grid g = Grid::box(2, -1.0, 1.0, 32);
    CHECK(contour_extract(Field(g, 1.0), 0.0).empty());
  }
  SUBCASE("saddle") {
    const Grid g = Grid::box(2, -1.0, 1.0, 32);
    const Field f = Field::from_function(g, [](const Point& x) { return x.x() * x.y(); });
    const Contour c = contour_extract(f, 0.0);
    CHECK(c.lines.size() == 2);
    for (const auto& l : c.lines) CHECK_FALSE(l.closed);
  }
}

TEST_CASE("level set measure") {
  const Grid g = Grid::box(2, -1.0, 1.0, 256);
  const SignedDistanceField sdf = signed_distance(Circle{Point2::Zero(), 0.4}, g);
  CHECK(level_set_measure(sdf, -0.1) == doctest::Approx(2 * std::numbers::pi * 0.5).epsilon(0.02));
  CHECK(level_set_measure(sdf, 0.1) == doctest::Approx(2 * std::numbers::pi * 0.3).epsilon(0.02));
  CHECK(level_set_measure(sdf, 0.39 * 0.6) >= 0.0);
  CHECK_THROWS_AS(level_set_measure(sdf, 0.0), ValidationError);
}

TEST_CASE("Koch flake: box-counting dimension and level-set growth exponent") {
  const double kappa = koch_kappa();
  CHECK(kappa == doctest::Approx(0.2619).epsilon(1e-3));
  const KochFlake flake{4, 0.6, Point2::Zero()};
  const auto poly = koch_vertices(flake);
  const double L = flake.side;
  CHECK(box_counting_dimension(poly, {L / 81, L / 54, L / 27, L / 18, L / 9}) == doctest::Approx(1 + kappa).epsilon(0.05));

  const Grid g = Grid::box(2, -0.4, 0.4, 2048);
  const SignedDistanceField sdf = signed_distance(flake, g, 0.021);
  for (double side : {-1.0, 1.0}) {
    std::vector<double> lr, ll;
    for (int i = 0; i <= 8; ++i) {
      const double r = 0.002 * std::pow(10.0, i / 8.0);
      lr.push_back(std::log(r));
      ll.push_back(std::log(level_set_measure(sdf, side * r)));
    }
    const double slope = fitted_slope(lr, ll);
    CHECK(slope >= -kappa - 0.1);
    CHECK(slope <= -kappa + 0.1);
  }
}

TEST_CASE("Koch flake lower density ratio stays positive") {
  const KochFlake flake{4, 0.6, Point2::Zero()};
  const auto poly = koch_vertices(flake);
  const double seg = flake.side / 81.0;
  const double dimension = 1.0 + koch_kappa();
  double theta = 1e300;
  for (std::size_t i = 0; i < poly.size(); i += 7)
    for (double gamma : {0.004, 0.01, 0.03, 0.06}) {
      // each segment carries (1 + kappa)-mass seg^(1 + kappa)
      const double mass = length_in_ball(poly, poly[i], gamma) * std::pow(seg, dimension - 1.0);
      theta = std::min(theta, mass / std::pow(gamma, dimension));
    }
  CHECK(theta > 0.1);
}

TEST_CASE("Hausdorff distance") {
  const Grid g = Grid::box(2, -1.0, 1.0, 200);
  const double h = g.spacing();
  const Contour a = circle_contour(0.3, 0.0, g);
  const Contour b = circle_contour(0.4, 0.0, g);
  CHECK(hausdorff_distance(a, a, h) < 1e-12);
  CHECK(hausdorff_distance(a, b, h) == doctest::Approx(0.1).epsilon(2 * h / 0.1));
  CHECK(std::abs(hausdorff_distance(a, b, h) - 0.1) <= 2 * h);
  const double delta = 0.07;
  const Contour shifted = circle_contour(0.3, delta, g);
  CHECK(std::abs(hausdorff_distance(a, shifted, h) - delta) <= 2 * h);
  CHECK_THROWS_AS(hausdorff_distance(a, Contour{}, h), ValidationError);
}
