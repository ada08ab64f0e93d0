#include "fattenlab/shooting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

#include "fattenlab/energy.hpp"
#include "fattenlab/field_io.hpp"
#include "fattenlab/kernels.hpp"
#include "fattenlab/parallel.hpp"

namespace fattenlab {

namespace {

double turning(const Point2& a, const Point2& b, const Point2& c) {
  const Point2 u = b - a, v = c - b;
  if (u.norm() == 0.0 || v.norm() == 0.0) return 0.0;
  return std::atan2(u.x() * v.y() - u.y() * v.x(), u.dot(v));
}

LeafCheck check_leaf(const SignedDistanceField& sdf, double s) {
  LeafCheck c;
  c.s = s;
  const Contour con = contour_extract(sdf.field, s);
  c.lines = con.lines.size();
  c.length = con.length();
  for (const auto& l : con.lines) {
    const std::size_t n = l.points.size();
    if (n < 3) continue;
    double total = 0.0;
    const std::size_t first = l.closed ? 0 : 1, last = l.closed ? n : n - 1;
    for (std::size_t i = first; i < last; ++i) {
      const double a = std::abs(turning(l.points[(i + n - 1) % n], l.points[i], l.points[(i + 1) % n]));
      total += a;
      c.max_turning = std::max(c.max_turning, a);
    }
    c.total_turning = std::max(c.total_turning, total);
  }
  return c;
}

void check_centred(const Grid& g) {
  for (int a = 0; a < std::min(g.dim(), 2); ++a)
    require(std::abs(g.lo(a) + g.hi(a)) <= 1e-12 * g.length(), "symmetry group needs a box centred at the origin");
}

/// Node index of the image of (i, j, k) under element e of the group.
using NodeMap = std::array<Index, 3> (*)(std::array<Index, 3>, Index);

std::array<Index, 3> flip_x(std::array<Index, 3> c, Index p) { return {p - 1 - c[0], c[1], c[2]}; }
std::array<Index, 3> flip_y(std::array<Index, 3> c, Index p) { return {c[0], p - 1 - c[1], c[2]}; }
std::array<Index, 3> flip_xy(std::array<Index, 3> c, Index p) { return {p - 1 - c[0], p - 1 - c[1], c[2]}; }
std::array<Index, 3> swap_xy(std::array<Index, 3> c, Index) { return {c[1], c[0], c[2]}; }
std::array<Index, 3> swap_flip_x(std::array<Index, 3> c, Index p) { return {c[1], p - 1 - c[0], c[2]}; }
std::array<Index, 3> swap_flip_y(std::array<Index, 3> c, Index p) { return {p - 1 - c[1], c[0], c[2]}; }
std::array<Index, 3> swap_flip_xy(std::array<Index, 3> c, Index p) { return {p - 1 - c[1], p - 1 - c[0], c[2]}; }

std::vector<NodeMap> elements(SymmetryGroup g) {
  switch (g) {
    case SymmetryGroup::ReflectX:
      return {flip_x};
    case SymmetryGroup::ReflectY:
      return {flip_y};
    case SymmetryGroup::D2:
      return {flip_x, flip_y, flip_xy};
    case SymmetryGroup::D4:
      return {flip_x, flip_y, flip_xy, swap_xy, swap_flip_x, swap_flip_y, swap_flip_xy};
  }
  return {};
}

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

/// Nearest integer >= 1 to m with the given parity.
int with_parity(double m, bool odd) {
  const int base = odd ? 1 : 2;
  if (m <= base) return base;
  const int k = static_cast<int>(std::floor((m - base) / 2.0));
  const int lo = base + 2 * k, hi = lo + 2;
  return (m - lo <= hi - m) ? lo : hi;
}

StudyEntry study_one(const Foliation& fol, double eps, const SpaceTimePoint& x0, const ShootingOptions& opt,
                     double rho) {
  StudyEntry e;
  e.shot = bisect_leaf(fol, eps, x0, opt);
  if (!e.shot.converged) throw NumericalError("bisection did not reach shoot_tol at eps = " + format_double(eps));
  e.solution = fol.solution_at(e.shot.s_star, eps, x0.t);
  e.nodal = contour_extract(e.solution, 0.0);
  e.nodal_distance = e.nodal.empty() ? std::numeric_limits<double>::infinity()
                                     : distance_to_contour(e.nodal, x0.x.head<2>());
  const Field dens = energy_and_discrepancy(e.solution, eps).density;
  const Grid& g = dens.grid();
  double mass = 0.0;
  for (Index n = 0; n < g.size(); ++n)
    if ((g.node(n) - x0.x).norm() <= rho) mass += dens[n];
  e.local_mass = mass * g.cell_volume();
  return e;
}

}  // namespace

bool LeafCheck::ok() const { return lines > 0 && total_turning <= 6.0 * std::numbers::pi; }

Foliation::Foliation(FoliationSpec spec) : spec_(std::move(spec)) {
  require(spec_.eta > 0.0, "eta must be positive");
  sdf_ = signed_distance(spec_.shape, spec_.grid, spec_.clamp);
  require(spec_.eta < sdf_.clamp, "eta must be below the distance clamp");
  if (spec_.grid.dim() == 2) {
    for (double s : {-spec_.eta, spec_.eta}) {
      leaf_checks_.push_back(check_leaf(sdf_, s));
      require(leaf_checks_.back().ok(), "end leaf {d = " + format_double(s) + "} is not a smooth offset");
    }
  }
}

Field Foliation::leaf(double s) const {
  require(std::abs(s) <= spec_.eta * (1.0 + 1e-12), "leaf parameter |s| must not exceed eta");
  return leaf_initial_data(sdf_, s, spec_.sampling);
}

ACParams Foliation::params(double eps, double t_end, std::vector<double> snapshots) const {
  ACParams p;
  p.epsilon = eps;
  p.scheme = Scheme::ExplicitEuler;
  p.t_end = t_end;
  p.snapshot_times = std::move(snapshots);
  return p;
}

Field Foliation::solution_at(double s, double eps, double t0) const {
  require(t0 > 0.0, "t0 must be positive");
  const auto key = std::make_tuple(s, eps, t0);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  ACSolution sol = evolve(leaf(s), params(eps, t0, {t0}));
  Field u = std::move(sol.snapshots.back());
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.insert_or_assign(key, u);
  return u;
}

std::size_t Foliation::cache_size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

double family_value_at(const Foliation& fol, double s, double eps, const SpaceTimePoint& x0) {
  return sample(fol.solution_at(s, eps, x0.t), x0.x);
}

bool MonotoneReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const MonotoneRow& r) { return r.violations == 0; });
}

MonotoneReport check_monotone_in_s(const Foliation& fol, double eps, const std::vector<double>& s_list,
                                   const std::vector<double>& t_list) {
  require(std::is_sorted(s_list.begin(), s_list.end()), "s_list must be sorted");
  require(!t_list.empty() && std::is_sorted(t_list.begin(), t_list.end()), "t_list must be sorted and non-empty");
  MonotoneReport rep;
  std::vector<ACSolution> sols;
  for (double s : s_list) sols.push_back(evolve(fol.leaf(s), fol.params(eps, t_list.back(), t_list)));
  for (std::size_t i = 0; i + 1 < sols.size(); ++i) {
    for (std::size_t k = 0; k < t_list.size(); ++k) {
      const Field& lo = sols[i].snapshots[k];
      const Field& hi = sols[i + 1].snapshots[k];
      MonotoneRow r;
      r.s1 = s_list[i];
      r.s2 = s_list[i + 1];
      r.t = lo.time();
      const auto excess = (hi.values() - lo.values()).eval();
      r.max_violation = std::max(0.0, excess.maxCoeff());
      r.violations = (excess > rep.tolerance).count();
      rep.rows.push_back(r);
    }
  }
  return rep;
}

bool ShootingResult::history_monotone(double slack) const {
  std::vector<BracketStep> h = history;
  std::stable_sort(h.begin(), h.end(), [](const BracketStep& a, const BracketStep& b) { return a.s < b.s; });
  for (std::size_t i = 1; i < h.size(); ++i)
    if (h[i].value > h[i - 1].value + slack) return false;
  return true;
}

ShootingResult bisect_leaf(const Foliation& fol, double eps, const SpaceTimePoint& x0, const ShootingOptions& opt) {
  require(opt.kappa > 0.0 && opt.kappa < 0.5, "kappa must be in (0, 1/2)");
  require(opt.tol > 0.0, "shoot_tol must be positive");
  require(fol.grid().contains(x0.x), "target point outside box");
  const double eta = fol.spec().eta;
  auto value = [&](double s) { return family_value_at(fol, s, eps, x0); };

  ShootingResult r;
  r.epsilon = eps;
  r.target = x0;
  r.tol = opt.tol;
  double lo = -eta, hi = eta;
  const double v_lo = value(lo), v_hi = value(hi);
  r.history = {{lo, v_lo}, {hi, v_hi}};
  if (!(v_lo >= 1.0 - opt.kappa && v_hi <= opt.kappa - 1.0))
    throw ValidationError("eps too large or t0 outside fattening window (u(-eta) = " + format_double(v_lo) +
                          ", u(+eta) = " + format_double(v_hi) + ")");

  double best_s = std::abs(v_lo) <= std::abs(v_hi) ? lo : hi;
  double best_v = std::abs(v_lo) <= std::abs(v_hi) ? v_lo : v_hi;
  while (r.iterations < opt.max_iterations) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double v = value(mid);
    ++r.iterations;
    r.history.push_back({mid, v});
    if (std::abs(v) < std::abs(best_v)) {
      best_s = mid;
      best_v = v;
    }
    if (std::abs(v) <= opt.tol) {
      r.converged = true;
      break;
    }
    (v > 0.0 ? lo : hi) = mid;
  }
  r.bracket = {lo, hi};
  r.s_star = best_s;
  r.value = best_v;

  if (r.converged) {
    // flat interval of zeros: widen while both probes stay within tol
    double w = fol.grid().spacing() / 4.0;
    std::optional<std::pair<double, double>> flat;
    while (r.s_star - w >= -eta && r.s_star + w <= eta) {
      const double a = value(r.s_star - w), b = value(r.s_star + w);
      r.history.push_back({r.s_star - w, a});
      r.history.push_back({r.s_star + w, b});
      if (std::abs(a) > opt.tol || std::abs(b) > opt.tol) break;
      flat = std::make_pair(r.s_star - w, r.s_star + w);
      w *= 2.0;
    }
    if (flat) {
      r.flat_interval = flat;
      r.s_star = 0.5 * (flat->first + flat->second);
      r.value = value(r.s_star);
    }
  }
  r.residual = std::abs(r.value);
  return r;
}

bool DiagonalStudy::nodal_ok() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const StudyEntry& e) { return e.nodal_distance <= 2.0 * e.solution.grid().spacing(); });
}

bool DiagonalStudy::mass_ok() const {
  return std::all_of(entries.begin(), entries.end(),
                     [&](const StudyEntry& e) { return e.local_mass >= kSurfaceTension * rho_loc; });
}

bool DiagonalStudy::hausdorff_nonincreasing() const {
  for (std::size_t i = 2; i < entries.size(); ++i)
    if (entries[i].hausdorff_to_previous > entries[i - 1].hausdorff_to_previous) return false;
  return true;
}

DiagonalStudy diagonal_study(const Foliation& fol, const SpaceTimePoint& x0, const std::vector<double>& eps_list,
                             const ShootingOptions& opt) {
  require(!eps_list.empty(), "eps_list must not be empty");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    require(eps_list[i] < eps_list[i - 1], "eps_list must be strictly decreasing");
  for (double eps : eps_list) validate(fol.params(eps, x0.t, {x0.t}), fol.grid());

  DiagonalStudy study;
  study.eps_list = eps_list;
  study.target = x0;
  study.tol = opt.tol;
  study.rho_loc = 10.0 * eps_list.back();

  const std::size_t n = eps_list.size();
  std::vector<std::optional<StudyEntry>> done(n);
  std::vector<std::string> errors(n);
  auto run = [&](std::size_t i) {
    try {
      done[i] = study_one(fol, eps_list[i], x0, opt, study.rho_loc);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };
  if (thread_count() > 1) {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(run, i);
    for (auto& t : pool) t.join();
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      run(i);
      if (!errors[i].empty()) break;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!done[i]) {
      study.failure = "eps = " + format_double(eps_list[i]) + ": " + (errors[i].empty() ? "not run" : errors[i]);
      break;
    }
    StudyEntry e = std::move(*done[i]);
    if (!study.entries.empty() && !e.nodal.empty() && !study.entries.back().nodal.empty())
      e.hausdorff_to_previous = hausdorff_distance(e.nodal, study.entries.back().nodal, fol.grid().spacing() / 4.0);
    study.entries.push_back(std::move(e));
  }
  return study;
}

SymmetryGroup parse_symmetry_group(const std::string& name) {
  if (name == "D2") return SymmetryGroup::D2;
  if (name == "D4") return SymmetryGroup::D4;
  if (name == "reflection-x") return SymmetryGroup::ReflectX;
  if (name == "reflection-y") return SymmetryGroup::ReflectY;
  throw ValidationError("unknown symmetry group '" + name + "'");
}

std::string to_string(SymmetryGroup g) {
  switch (g) {
    case SymmetryGroup::D2:
      return "D2";
    case SymmetryGroup::D4:
      return "D4";
    case SymmetryGroup::ReflectX:
      return "reflection-x";
    case SymmetryGroup::ReflectY:
      return "reflection-y";
  }
  return "?";
}

double symmetry_deviation(const Field& u, SymmetryGroup group) {
  const Grid& g = u.grid();
  check_centred(g);
  const Index p = g.points();
  double worst = 0.0;
  for (NodeMap m : elements(group)) {
    for (Index n = 0; n < g.size(); ++n) {
      const auto c = m(g.unravel(n), p);
      worst = std::max(worst, std::abs(u[n] - u.at(c[0], c[1], c[2])));
    }
  }
  return worst;
}

MultiplicityProbe probe_multiplicity(const Field& u, double eps, const Transversal& seg) {
  const Grid& g = u.grid();
  require(g.dim() == 2, "multiplicity probes are 2-D");
  const double len = (seg.b - seg.a).norm();
  require(len > 0.0, "transversal must have positive length");
  const Field e = energy_and_discrepancy(u, eps).density;
  const int m = std::max(2, static_cast<int>(std::ceil(len / (g.spacing() / 4.0))));
  const double ds = len / m;
  std::vector<double> ev(static_cast<std::size_t>(m + 1)), uv(ev.size());
  for (int k = 0; k <= m; ++k) {
    const Point2 q = seg.a + (seg.b - seg.a) * (static_cast<double>(k) / m);
    const Point x(q.x(), q.y(), 0.0);
    ev[static_cast<std::size_t>(k)] = sample(e, x);
    uv[static_cast<std::size_t>(k)] = sample(u, x);
  }

  MultiplicityProbe out;
  out.epsilon = eps;
  out.segment = seg;
  auto count_changes = [&](std::size_t a, std::size_t b) {
    int changes = 0, last = 0;
    for (std::size_t k = a; k <= b; ++k) {
      const int s = sign_of(uv[k]);
      if (s != 0 && last != 0 && s != last) ++changes;
      if (s != 0) last = s;
    }
    return changes;
  };
  out.sign_changes = count_changes(0, ev.size() - 1);

  // runs above threshold, merged across short gaps
  const double level = 0.05 / eps;
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t k = 0; k < ev.size(); ++k) {
    if (ev[k] < level) continue;
    std::size_t j = k;
    while (j + 1 < ev.size() && ev[j + 1] >= level) ++j;
    if (!runs.empty() && (static_cast<double>(k - runs.back().second) * ds < 2.0 * eps))
      runs.back().second = j;
    else
      runs.emplace_back(k, j);
    k = j;
  }
  // each wall integrates out to halfway to its neighbours
  for (std::size_t w = 0; w < runs.size(); ++w) {
    const std::size_t a = w == 0 ? 0 : (runs[w - 1].second + runs[w].first) / 2;
    const std::size_t b = w + 1 == runs.size() ? ev.size() - 1 : (runs[w].second + runs[w + 1].first) / 2;
    WallProbe p;
    p.start = static_cast<double>(runs[w].first) * ds;
    p.end = static_cast<double>(runs[w].second) * ds;
    double mass = 0.0;
    for (std::size_t k = a; k < b; ++k) mass += 0.5 * (ev[k] + ev[k + 1]) * ds;
    p.mass = mass / kSurfaceTension;
    p.sign_changes = count_changes(a, b);
    p.phase_flips = sign_of(uv[a]) * sign_of(uv[b]) < 0;
    p.multiplicity = with_parity(p.mass, p.phase_flips);
    out.walls.push_back(p);
  }
  return out;
}

bool SymmetryReport::passed() const {
  return std::all_of(deviation.begin(), deviation.end(), [&](double d) { return d <= tolerance; });
}

SymmetryReport symmetry_and_multiplicity(const DiagonalStudy& study, SymmetryGroup group,
                                         const std::vector<Transversal>& transversals) {
  SymmetryReport rep;
  rep.group = group;
  for (const auto& e : study.entries) {
    rep.eps.push_back(e.shot.epsilon);
    rep.deviation.push_back(symmetry_deviation(e.solution, group));
    for (const auto& t : transversals) rep.probes.push_back(probe_multiplicity(e.solution, e.shot.epsilon, t));
  }
  return rep;
}

void write_shooting_result(const std::filesystem::path& path, const ShootingResult& r) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "# epsilon " << format_double(r.epsilon) << "\n";
  out << "# x0 " << format_double(r.target.x.x()) << ' ' << format_double(r.target.x.y()) << "\n";
  out << "# t0 " << format_double(r.target.t) << "\n";
  out << "# s_star " << format_double(r.s_star) << "\n";
  out << "# value " << format_double(r.value) << "\n";
  out << "# residual " << format_double(r.residual) << "\n";
  out << "# shoot_tol " << format_double(r.tol) << "\n";
  out << "# iterations " << r.iterations << "\n";
  out << "# bracket " << format_double(r.bracket.first) << ' ' << format_double(r.bracket.second) << "\n";
  out << "# flat_interval "
      << (r.flat_interval ? format_double(r.flat_interval->first) + " " + format_double(r.flat_interval->second)
                          : std::string("none"))
      << "\n";
  out << "# converged " << (r.converged ? "yes" : "no") << "\n";
  out << "# s value\n";
  for (const auto& b : r.history) out << format_double(b.s) << ' ' << format_double(b.value) << "\n";
}

void print_monotone_report(std::ostream& out, const MonotoneReport& rep) {
  out << "# s1 s2 t max_violation violations (tolerance " << format_double(rep.tolerance) << ")\n";
  for (const auto& r : rep.rows)
    out << format_double(r.s1) << ' ' << format_double(r.s2) << ' ' << format_double(r.t) << ' '
        << format_double(r.max_violation) << ' ' << r.violations << "\n";
}

void print_study_summary(std::ostream& out, const DiagonalStudy& study) {
  out << "# rho_loc " << format_double(study.rho_loc) << "\n";
  out << "# eps s_star residual iterations nodal_distance two_h local_mass sigma_rho hausdorff_to_previous\n";
  for (const auto& e : study.entries)
    out << format_double(e.shot.epsilon) << ' ' << format_double(e.shot.s_star) << ' '
        << format_double(e.shot.residual) << ' ' << e.shot.iterations << ' ' << format_double(e.nodal_distance)
        << ' ' << format_double(2.0 * e.solution.grid().spacing()) << ' ' << format_double(e.local_mass) << ' '
        << format_double(kSurfaceTension * study.rho_loc) << ' ' << format_double(e.hausdorff_to_previous) << "\n";
  if (!study.failure.empty()) out << "# failure " << study.failure << "\n";
}

void print_symmetry_report(std::ostream& out, const SymmetryReport& rep) {
  out << "# group " << to_string(rep.group) << " tolerance " << format_double(rep.tolerance) << "\n";
  out << "# eps deviation\n";
  for (std::size_t i = 0; i < rep.eps.size(); ++i)
    out << format_double(rep.eps[i]) << ' ' << format_double(rep.deviation[i]) << "\n";
  if (rep.probes.empty()) return;
  out << "# eps ax ay bx by sign_changes | wall start end mass/sigma sign_changes phase_flips multiplicity\n";
  for (const auto& p : rep.probes) {
    out << format_double(p.epsilon) << ' ' << format_double(p.segment.a.x()) << ' ' << format_double(p.segment.a.y())
        << ' ' << format_double(p.segment.b.x()) << ' ' << format_double(p.segment.b.y()) << ' ' << p.sign_changes
        << "\n";
    for (std::size_t w = 0; w < p.walls.size(); ++w) {
      const auto& wall = p.walls[w];
      out << "  wall " << w << ' ' << format_double(wall.start) << ' ' << format_double(wall.end) << ' '
          << format_double(wall.mass) << ' ' << wall.sign_changes << ' ' << (wall.phase_flips ? "yes" : "no") << ' '
          << wall.multiplicity << "\n";
    }
  }
}

}  // namespace fattenlab
