#include "fattenlab/lsf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "fattenlab/field_io.hpp"
#include "fattenlab/kernels.hpp"
#include "fattenlab/shooting.hpp"

namespace fattenlab {

namespace {

/// Largest distance to `c` over sampled points of `from` that fail `outside_ok`.
template <typename Pred>
double excursion(const Contour& from, const Contour& c, double step, Pred&& bad) {
  double worst = 0.0;
  for (const auto& l : from.lines) {
    const std::size_t n = l.points.size();
    const std::size_t segs = l.closed ? n : n - 1;
    for (std::size_t i = 0; i < segs; ++i) {
      const Point2 a = l.points[i], b = l.points[(i + 1) % n];
      const int k = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
      for (int s = 0; s < k; ++s) {
        const Point2 q = a + (b - a) * (static_cast<double>(s) / k);
        if (!bad(q)) continue;
        worst = std::max(worst, c.empty() ? std::numeric_limits<double>::infinity() : distance_to_contour(c, q));
      }
    }
  }
  return worst;
}

double value_at(const Field& f, const Point2& q) { return sample(f, Point(q.x(), q.y(), 0.0)); }

double band_gradient(const Field& phi) {
  const Grid& g = phi.grid();
  const Field grad2 = gradient_norm_sq(phi, Extension::distance(g));
  double sum = 0.0;
  Index count = 0;
  for (Index n = 0; n < g.size(); ++n) {
    if (std::abs(phi[n]) >= 2.0 * g.spacing()) continue;
    sum += std::sqrt(grad2[n]);
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace

double lsf_default_time_step(const Grid& grid) { return grid.spacing() * grid.spacing() / (8.0 * grid.dim()); }

Field lsf_step(const Field& phi, double beta, double dt) {
  const Grid& g = phi.grid();
  const Extension ext = Extension::distance(g);
  const int dim = g.dim();
  std::vector<Field> d1;
  for (int a = 0; a < dim; ++a) d1.push_back(central_difference(phi, a, ext));
  Field grad2(g, 0.0);
  for (const auto& d : d1) grad2.values() += d.values().square();

  // grad phi . D^2 phi grad phi
  Field quad(g, 0.0);
  Field lap(g, 0.0);
  for (int a = 0; a < dim; ++a) {
    const Field daa = second_difference(phi, a, ext);
    lap.values() += daa.values();
    quad.values() += d1[static_cast<std::size_t>(a)].values().square() * daa.values();
    for (int b = a + 1; b < dim; ++b) {
      const Field dab = central_difference(d1[static_cast<std::size_t>(a)], b, ext);
      quad.values() += 2.0 * d1[static_cast<std::size_t>(a)].values() * d1[static_cast<std::size_t>(b)].values() * dab.values();
    }
  }
  Field out(g, 0.0, phi.time() + dt);
  out.values() = phi.values() + dt * (lap.values() - quad.values() / (grad2.values() + beta));
  return out;
}

LSFSolution lsf_evolve(const Field& phi0, const LSFParams& p) {
  const Grid& g = phi0.grid();
  require(p.beta >= 1e-8 && p.beta <= 1e-4, "beta must be in [1e-8, 1e-4]");
  const double dt = p.dt > 0.0 ? p.dt : lsf_default_time_step(g);
  require(dt <= lsf_default_time_step(g) * (1.0 + 1e-12), "dt must not exceed h^2/(8 dim)");
  require(p.t_end >= 0.0, "t_end must be non-negative");
  require(std::is_sorted(p.snapshot_times.begin(), p.snapshot_times.end()), "snapshot_times must be sorted");
  for (double t : p.snapshot_times)
    require(t >= 0.0 && t <= p.t_end * (1.0 + 1e-12), "snapshot_times must lie in [0, t_end]");
  require(phi0.all_finite(), "initial level-set function must be finite");

  LSFSolution sol;
  sol.params = p;
  sol.dt = dt;
  sol.initial = phi0;
  sol.initial.set_time(0.0);

  std::vector<Index> at_step;
  for (double t : p.snapshot_times) at_step.push_back(static_cast<Index>(std::llround(t / dt)));
  const Index total = std::max(static_cast<Index>(std::llround(p.t_end / dt)), at_step.empty() ? 0 : at_step.back());

  Field cur = sol.initial;
  std::size_t snap = 0;
  auto capture = [&](Index n) {
    while (snap < at_step.size() && at_step[snap] == n) {
      if (!cur.all_finite()) throw NumericalError("level-set flow became non-finite at step " + std::to_string(n));
      sol.snapshots.push_back(cur);
      sol.band_gradient.push_back(band_gradient(cur));
      ++snap;
    }
  };
  capture(0);
  for (Index n = 1; n <= total; ++n) {
    cur = lsf_step(cur, p.beta, dt);
    cur.set_time(static_cast<double>(n) * dt);
    if (n % 256 == 0 && !cur.all_finite())
      throw NumericalError("level-set flow became non-finite at step " + std::to_string(n));
    capture(n);
  }
  if (!cur.all_finite()) throw NumericalError("level-set flow became non-finite");
  sol.steps = total;
  return sol;
}

FatteningRow fattening_measure(const Field& phi, double band) {
  const Grid& g = phi.grid();
  require(g.dim() == 2, "fattening measure is 2-D");
  require(band >= g.spacing() * (1.0 - 1e-12), "band must be at least h");
  FatteningRow r;
  r.t = phi.time();
  r.band = band;
  r.band_area = static_cast<double>((phi.values().abs() < band).count()) * g.cell_volume();
  const Contour zero = contour_extract(phi, 0.0);
  r.zero_length = zero.length();
  // median |grad phi| along the zero set: the smooth arcs, not a fattened plateau
  const Field grad2 = gradient_norm_sq(phi, Extension::distance(g));
  std::vector<double> slopes;
  for (const auto& l : zero.lines)
    for (const auto& q : l.points) slopes.push_back(std::sqrt(value_at(grad2, q)));
  if (!slopes.empty()) {
    auto mid = slopes.begin() + static_cast<std::ptrdiff_t>(slopes.size() / 2);
    std::nth_element(slopes.begin(), mid, slopes.end());
    r.zero_slope = *mid;
  }
  r.tube_area = r.zero_slope > 0.0 ? 2.0 * band * r.zero_length / r.zero_slope : 0.0;
  r.excess = r.band_area - r.tube_area;
  r.noise_floor = 0.5 * g.spacing() * r.zero_length;
  r.threshold = 4.0 * g.spacing() * r.zero_length;
  return r;
}

FatteningSeries fattening_series(const LSFSolution& sol, double band) {
  FatteningSeries s;
  for (const Field& phi : sol.snapshots) {
    s.rows.push_back(fattening_measure(phi, band));
    const FatteningRow& r = s.rows.back();
    if (r.t > 0.0 && r.detected() && !s.t_detect) s.t_detect = r.t;
    if (r.fattened() && !s.t_fat) s.t_fat = r.t;
  }
  return s;
}

double EnvelopePair::containment_excursion() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Field& in = inner_phi[k];
    const Field& out = outer_phi[k];
    const Grid& g = in.grid();
    for (Index n = 0; n < g.size(); ++n) {
      if (out[n] > 0.0 && in[n] <= 0.0) {
        const Point x = g.node(n);
        worst = std::max(worst, inner[k].empty() ? std::numeric_limits<double>::infinity()
                                                  : distance_to_contour(inner[k], x.head<2>()));
      }
    }
  }
  return worst;
}

EnvelopePair inner_outer_envelopes(const SignedDistanceField& sdf, double delta, const std::vector<double>& t_list,
                                   double beta) {
  require(sdf.grid().dim() == 2, "envelopes are 2-D");
  require(delta >= 0.0 && delta < sdf.clamp, "delta must be in [0, clamp)");
  require(!t_list.empty(), "envelope times must not be empty");
  EnvelopePair env;
  env.delta = delta;
  env.times = t_list;
  LSFParams p;
  p.beta = beta;
  p.t_end = *std::max_element(t_list.begin(), t_list.end());
  p.snapshot_times = t_list;
  std::sort(p.snapshot_times.begin(), p.snapshot_times.end());
  require(p.snapshot_times == t_list, "envelope times must be sorted");

  for (const double sign : {1.0, -1.0}) {
    Field phi0 = sdf.field;
    phi0.values() += sign * delta;
    LSFSolution sol = lsf_evolve(phi0, p);
    auto& fields = sign > 0 ? env.inner_phi : env.outer_phi;
    auto& lines = sign > 0 ? env.inner : env.outer;
    for (Field& f : sol.snapshots) {
      lines.push_back(contour_extract(f, 0.0));
      fields.push_back(std::move(f));
    }
  }
  return env;
}

bool SandwichReport::passed() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const SandwichRow& r) { return r.passed(); });
}

SandwichReport sandwich_check(const DiagonalStudy& study, const EnvelopePair& env) {
  const double t0 = study.target.t;
  std::size_t k = env.times.size();
  for (std::size_t i = 0; i < env.times.size(); ++i)
    if (std::abs(env.times[i] - t0) <= 1e-12 * std::max(1.0, t0)) k = i;
  require(k < env.times.size(), "envelopes have no time matching t0");

  SandwichReport rep;
  for (const auto& e : study.entries) {
    const double h = e.solution.grid().spacing();
    SandwichRow r;
    r.epsilon = e.shot.epsilon;
    r.t = t0;
    r.tolerance = 2.0 * h;
    const Field& in = env.inner_phi[k];
    const Field& out = env.outer_phi[k];
    r.inner_excursion = excursion(e.nodal, env.inner[k], h / 4.0, [&](const Point2& q) { return value_at(in, q) < 0.0; });
    r.outer_excursion = excursion(e.nodal, env.outer[k], h / 4.0, [&](const Point2& q) { return value_at(out, q) > 0.0; });
    rep.rows.push_back(r);
  }
  return rep;
}

void print_fattening_series(std::ostream& out, const FatteningSeries& s) {
  out << "# t band band_area zero_length zero_slope tube_area excess noise_floor threshold fattened\n";
  for (const auto& r : s.rows)
    out << format_double(r.t) << ' ' << format_double(r.band) << ' ' << format_double(r.band_area) << ' '
        << format_double(r.zero_length) << ' ' << format_double(r.zero_slope) << ' ' << format_double(r.tube_area)
        << ' ' << format_double(r.excess) << ' ' << format_double(r.noise_floor) << ' ' << format_double(r.threshold) << ' ' << (r.fattened() ? "yes" : "no") << "\n";
  out << "# t_detect " << (s.t_detect ? format_double(*s.t_detect) : std::string("none")) << "\n";
  out << "# t_fat " << (s.t_fat ? format_double(*s.t_fat) : std::string("none")) << "\n";
}

void print_sandwich_report(std::ostream& out, const SandwichReport& rep) {
  out << "# eps t inner_excursion outer_excursion tolerance pass\n";
  for (const auto& r : rep.rows)
    out << format_double(r.epsilon) << ' ' << format_double(r.t) << ' ' << format_double(r.inner_excursion) << ' '
        << format_double(r.outer_excursion) << ' ' << format_double(r.tolerance) << ' ' << (r.passed() ? "yes" : "no")
        << "\n";
}

}  // namespace fattenlab
