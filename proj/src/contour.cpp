#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "fattenlab/field_io.hpp"
#include "fattenlab/geometry.hpp"

namespace fattenlab {

namespace {

double segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace

double ContourLine::length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) len += (points[i] - points[i - 1]).norm();
  if (closed && points.size() > 1) len += (points.front() - points.back()).norm();
  return len;
}

double Contour::length() const {
  double len = 0.0;
  for (const auto& l : lines) len += l.length();
  return len;
}

std::size_t Contour::vertex_count() const {
  std::size_t n = 0;
  for (const auto& l : lines) n += l.points.size();
  return n;
}

Contour contour_extract(const Field& f, double level) {
  const Grid& g = f.grid();
  require(g.dim() == 2, "contour extraction needs a 2-D field");
  require(f.all_finite(), "contour extraction needs a finite field");
  const Index p = g.points();

  // Crossing points live on grid edges: id 2n for the +x edge of node n,
  // 2n + 1 for its +y edge.
  std::unordered_map<Index, Point2> point_of;
  std::unordered_map<Index, std::vector<Index>> adjacent;
  std::vector<Index> order;  // first-seen order of crossing ids, for determinism

  auto crossing = [&](Index i, Index j, int axis) {
    const Index n = g.index(i, j);
    const Index id = 2 * n + axis;
    if (!point_of.count(id)) {
      const double a = f.at(i, j);
      const double b = axis == 0 ? f.at(i + 1, j) : f.at(i, j + 1);
      const double t = std::clamp((level - a) / (b - a), 0.0, 1.0);
      Point2 x(g.coord(0, i), g.coord(1, j));
      x[axis] += t * g.spacing();
      point_of.emplace(id, x);
      order.push_back(id);
    }
    return id;
  };
  auto link = [&](Index a, Index b) {
    adjacent[a].push_back(b);
    adjacent[b].push_back(a);
  };

  for (Index j = 0; j + 1 < p; ++j)
    for (Index i = 0; i + 1 < p; ++i) {
      const double v0 = f.at(i, j), v1 = f.at(i + 1, j), v2 = f.at(i + 1, j + 1), v3 = f.at(i, j + 1);
      const int c = (v0 >= level ? 1 : 0) | (v1 >= level ? 2 : 0) | (v2 >= level ? 4 : 0) | (v3 >= level ? 8 : 0);
      if (c == 0 || c == 15) continue;
      auto bottom = [&] { return crossing(i, j, 0); };
      auto right = [&] { return crossing(i + 1, j, 1); };
      auto top = [&] { return crossing(i, j + 1, 0); };
      auto left = [&] { return crossing(i, j, 1); };
      switch (c) {
        case 1: case 14: link(left(), bottom()); break;
        case 2: case 13: link(bottom(), right()); break;
        case 3: case 12: link(left(), right()); break;
        case 4: case 11: link(right(), top()); break;
        case 6: case 9: link(bottom(), top()); break;
        case 7: case 8: link(left(), top()); break;
        case 5: case 10: {
          const bool center_high = 0.25 * (v0 + v1 + v2 + v3) >= level;
          // corners 0 and 2 high (case 5) or 1 and 3 high (case 10)
          const bool join_02 = (c == 5) == center_high;
          if (join_02) {
            link(bottom(), right());  // isolates corner 1
            link(top(), left());      // isolates corner 3
          } else {
            link(left(), bottom());   // isolates corner 0
            link(right(), top());     // isolates corner 2
          }
          break;
        }
        default: break;
      }
    }

  Contour out;
  out.level = level;
  out.time = f.time();
  std::unordered_map<Index, bool> used;
  auto walk = [&](Index start) {
    ContourLine line;
    Index prev = -1, cur = start;
    line.points.push_back(point_of[cur]);
    used[cur] = true;
    while (true) {
      Index next = -1;
      for (Index nb : adjacent[cur])
        if (nb != prev && !used[nb]) {
          next = nb;
          break;
        }
      if (next < 0) {
        const auto& nbs = adjacent[cur];
        line.closed = line.points.size() > 2 && std::find(nbs.begin(), nbs.end(), start) != nbs.end();
        break;
      }
      line.points.push_back(point_of[next]);
      used[next] = true;
      prev = cur;
      cur = next;
    }
    out.lines.push_back(std::move(line));
  };
  for (Index id : order)
    if (!used[id] && adjacent[id].size() == 1) walk(id);
  for (Index id : order)
    if (!used[id]) walk(id);
  return out;
}

double level_set_measure(const SignedDistanceField& sdf, double r) {
  require(r != 0.0 && std::abs(r) < sdf.clamp, "level must satisfy 0 < |r| < clamp");
  return contour_extract(sdf.field, r).length();
}

double distance_to_contour(const Contour& c, const Point2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& l : c.lines) {
    const std::size_t n = l.points.size();
    if (n == 1) best = std::min(best, (p - l.points[0]).norm());
    for (std::size_t i = 0; i + 1 < n; ++i) best = std::min(best, segment_distance(p, l.points[i], l.points[i + 1]));
    if (l.closed && n > 1) best = std::min(best, segment_distance(p, l.points[n - 1], l.points[0]));
  }
  return best;
}

double directed_hausdorff(const Contour& from, const Contour& to, double step) {
  require(!from.empty() && !to.empty(), "Hausdorff distance needs non-empty contours");
  require(step > 0.0, "sampling step must be positive");
  double worst = 0.0;
  for (const auto& l : from.lines) {
    const std::size_t n = l.points.size();
    const std::size_t segs = l.closed ? n : n - 1;
    if (n == 1) worst = std::max(worst, distance_to_contour(to, l.points[0]));
    for (std::size_t i = 0; i < segs; ++i) {
      const Point2 a = l.points[i];
      const Point2 b = l.points[(i + 1) % n];
      const int k = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
      for (int s = 0; s <= k; ++s) worst = std::max(worst, distance_to_contour(to, a + (b - a) * (double(s) / k)));
    }
  }
  return worst;
}

double hausdorff_distance(const Contour& a, const Contour& b, double step) {
  return std::max(directed_hausdorff(a, b, step), directed_hausdorff(b, a, step));
}

void write_contour(const std::filesystem::path& path, const Contour& c) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "# level " << format_double(c.level) << " time " << format_double(c.time) << "\n";
  for (std::size_t i = 0; i < c.lines.size(); ++i) {
    out << "# line " << i << (c.lines[i].closed ? " closed" : " open") << "\n";
    for (const auto& q : c.lines[i].points) out << format_double(q.x()) << ',' << format_double(q.y()) << "\n";
  }
}

}  // namespace fattenlab
