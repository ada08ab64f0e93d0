// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers on
// the command line to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fattenlab/barriers.hpp"
#include "fattenlab/config.hpp"
#include "fattenlab/energy.hpp"
#include "fattenlab/field_io.hpp"
#include "fattenlab/geometry.hpp"
#include "fattenlab/parallel.hpp"
#include "fattenlab/run.hpp"

using namespace fattenlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// R' = -1/R by RK4: the radius of a circle moving by curvature.
double radius_oracle(double r0, double t, int steps = 4000) {
  double r = r0;
  const double k = t / steps;
  auto f = [](double x) { return -1.0 / x; };
  for (int i = 0; i < steps; ++i) {
    const double a = f(r), b = f(r + 0.5 * k * a), c = f(r + 0.5 * k * b), d = f(r + k * c);
    r += k * (a + 2 * b + 2 * c + d) / 6.0;
  }
  return r;
}

double mean_radius(const Contour& c) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& l : c.lines)
    for (const auto& p : l.points) {
      sum += p.norm();
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

ACSolution run_ac(const SignedDistanceField& sdf, double eps, std::vector<double> times,
                  const StepObserver& observer = {}) {
  ACParams p;
  p.epsilon = eps;
  p.t_end = times.back();
  p.snapshot_times = std::move(times);
  return evolve(leaf_initial_data(sdf, 0.0), p, observer);
}

std::vector<double> log_times(double lo, double hi, int n) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return t;
}

// ---------------------------------------------------------------------------

Outcome standing_wave() {
  const auto t0 = std::chrono::steady_clock::now();
  const double eps = 0.05, h = eps / 8;
  const Grid g = Grid::box(2, -40 * h, 40 * h, 80);
  const Field u = Field::from_function(g, [&](const Point& x) { return std::tanh(x.x() / eps); });
  ACParams p;
  p.epsilon = eps;
  const double dt = time_step(p, g);
  const Field next = step(u, p);
  double worst = 0.0;
  for (Index n = 0; n < g.size(); ++n) {
    const auto ijk = g.unravel(n);
    if (ijk[0] == 0 || ijk[1] == 0 || ijk[0] == g.points() - 1 || ijk[1] == g.points() - 1) continue;  // ghosts
    worst = std::max(worst, std::abs(next[n] - u[n]) / dt);
  }
  const double scale = 1.0 / (eps * eps);
  const double secs = seconds_since(t0);
  return {worst <= 1e-2 * scale && secs < 1.0,
          "residual " + num(worst / scale) + " x 1/eps^2 (limit 1e-2), " + num(secs) + " s (limit 1)"};
}

struct CircleRun {
  Grid grid;
  SignedDistanceField sdf;
  ACSolution sol;
  double max_abs_any_step = 0.0;
  double seconds = 0.0;
};

const CircleRun& circle_run() {
  static const CircleRun run = [] {
    CircleRun r;
    const auto t0 = std::chrono::steady_clock::now();
    r.grid = Grid::box(2, -1.0, 1.0, 512);
    r.sdf = signed_distance(Circle{Point2::Zero(), 0.4}, r.grid);
    std::vector<double> times;
    for (int i = 1; i <= 10; ++i) times.push_back(0.005 * i);
    r.sol = run_ac(r.sdf, 0.02, times, [&](const Field& u) { r.max_abs_any_step = std::max(r.max_abs_any_step, u.max_abs()); });
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

Outcome radius_law() {
  const CircleRun& r = circle_run();
  const double eps = r.sol.params.epsilon;
  double worst = 0.0;
  bool single = true;
  for (const Field& u : r.sol.snapshots) {
    const Contour c = contour_extract(u, 0.0);
    single = single && c.lines.size() == 1;
    worst = std::max(worst, std::abs(mean_radius(c) - radius_oracle(0.4, u.time())));
  }
  return {single && worst <= 3 * eps && r.seconds <= 120.0,
          "max |R - sqrt(R0^2 - 2t)| = " + num(worst) + " (limit 3 eps = " + num(3 * eps) + ") over " +
              std::to_string(r.sol.snapshots.size()) + " snapshots, " + num(r.seconds) + " s (limit 120)"};
}

Outcome sup_and_gradient() {
  const CircleRun& r = circle_run();
  const BoundsReport b = verify_solution_bounds(r.sol, 3.0);
  double worst_ratio = 0.0;
  for (const auto& row : b.rows) worst_ratio = std::max(worst_ratio, row.max_grad / row.grad_bound);
  const bool sup = r.max_abs_any_step <= 1.0 + 1e-9;
  return {sup && b.passed(), "max|u| over all steps " + num(r.max_abs_any_step) +
                                 " (limit 1 + 1e-9), max|grad u| / 3(1/sqrt t + sqrt t/eps^2) = " + num(worst_ratio)};
}

Outcome dtilde_properties() {
  const Grid g = Grid::box(2, -1.0, 1.0, 1024);
  bool ok = true, tight = true;
  double worst_grad = 0.0, worst_gap_ratio = 0.0, worst_cal = 0.0;
  for (const ShapeSpec& shape : {ShapeSpec(Circle{Point2::Zero(), 0.4}), ShapeSpec(FigureEight{0.3})}) {
    const SmoothedDistance sd = compute_dtilde(signed_distance(shape, g), {0.001, 0.0025, 0.005});
    for (const auto& c : sd.checks) {
      ok = ok && c.grad_ok() && c.gap_ok() && c.caloric_ok();
      tight = tight && c.tight_gap_ok();
      worst_grad = std::max(worst_grad, c.max_grad - c.grad_limit);
      worst_gap_ratio = std::max(worst_gap_ratio, c.max_gap / c.gap_bound_tight);
      worst_cal = std::max(worst_cal, c.max_caloric / c.caloric_limit);
    }
  }
  return {ok, "max(|grad d~| - (1+3h)) = " + num(worst_grad) + ", max |d - d~| / sqrt(dim t) = " +
                  num(worst_gap_ratio) + " (data supports " + (tight ? "sqrt(dim t)" : "only sqrt(2 dim t)") +
                  "), caloric / limit = " + num(worst_cal)};
}

Outcome barrier_suite() {
  const double eps = 0.02, e2 = eps * eps;
  const Grid g = Grid::box(2, -1.0, 1.0, 512);
  const SignedDistanceField sdf = signed_distance(Circle{Point2::Zero(), 0.4}, g);
  const ACSolution sol = run_ac(sdf, eps, {e2 / 8, e2 / 4, e2 / 2, e2});
  std::vector<double> times;
  for (const Field& u : sol.snapshots) times.push_back(u.time());
  const BarrierReport signs = verify_residual_signs(compute_dtilde(sdf, times), eps, {0.0, 4 * std::sqrt(2.0)});
  const BarrierReport ub = verify_u_barrier(sol, sdf);
  const BarrierReport gb = verify_gradient_barrier(sol, sdf);
  Index checked = 0;
  for (const auto* rep : {&signs, &ub, &gb})
    for (const auto& r : rep->rows)
      if (r.enforced) checked += r.checked;
  return {signs.passed() && ub.passed() && gb.passed() && checked > 0,
          "violations: residual signs " + std::to_string(signs.violations()) + ", u barrier " +
              std::to_string(ub.violations()) + ", gradient barrier " + std::to_string(gb.violations()) + " over " +
              std::to_string(checked) + " node checks at " + std::to_string(times.size()) + " snapshots t <= eps^2"};
}

EnergyReport early_energy(const ShapeSpec& shape, const Grid& g, double eps, int samples) {
  ACParams p;
  p.epsilon = eps;
  const double dt = time_step(p, g);
  const SignedDistanceField sdf = signed_distance(shape, g);
  return total_energy_series(run_ac(sdf, eps, log_times(4 * dt, eps * eps, samples)));
}

Outcome energy_smooth() {
  const double eps = 0.02;
  const Grid g = Grid::box(2, -0.6, 0.6, 1600);
  const EnergyReport rep = early_energy(Circle{Point2::Zero(), 0.4}, g, eps, 16);
  const double p = rep.early_fit.exponent;
  // t E^2 bounded: no growth toward t -> 0 across the early window
  double first = 0.0, last = 0.0;
  for (const auto& r : rep.rows) {
    if (r.t <= rep.early_fit.t_min * (1 - 1e-12)) continue;
    if (first == 0.0) first = r.t * r.energy * r.energy;
    last = r.t * r.energy * r.energy;
  }
  const double increase = rep.max_relative_increase(rep.rows.front().t);
  const bool ok = p >= -0.65 && p <= -0.35 && first <= last && increase <= 0.0;
  return {ok, "exponent " + num(p) + " (range [-0.65, -0.35]) over " + std::to_string(rep.early_fit.samples) +
                  " samples, t E^2 from " + num(first) + " to " + num(last) + ", max relative increase of E " +
                  num(increase)};
}

Outcome energy_fractal() {
  const auto t0 = std::chrono::steady_clock::now();
  const double eps = 0.01, kappa = koch_kappa();
  const KochFlake flake{4, 0.15, Point2::Zero()};
  const Grid g = Grid::box(2, -0.12, 0.12, 1024);
  const EnergyReport rep = early_energy(flake, g, eps, 16);
  const double p = rep.early_fit.exponent, target = -(1 + kappa) / 2;

  const SignedDistanceField sdf = signed_distance(flake, g);
  const std::vector<double> radii = log_times(5e-4, 5e-3, 9);
  double worst = 0.0;
  std::string slopes;
  for (double side : {1.0, -1.0}) {
    std::vector<double> len;
    for (double r : radii) len.push_back(level_set_measure(sdf, side * r));
    const double slope = fit_power_law(radii, len).exponent;
    worst = std::max(worst, std::abs(slope + kappa));
    slopes += (slopes.empty() ? "" : ", ") + num(slope);
  }
  const double secs = seconds_since(t0);
  return {std::abs(p - target) <= 0.15 && worst <= 0.1 && secs <= 900.0,
          "exponent " + num(p) + " (target " + num(target) + " +- 0.15), level-set slopes inside/outside " + slopes +
              " (target " + num(-kappa) + " +- 0.1), " + num(secs) + " s (limit 900)"};
}

FoliationSpec headline_foliation() {
  FoliationSpec spec;
  spec.shape = FigureEight{0.3};
  spec.grid = Grid::box(2, -1.0, 1.0, 512);
  spec.eta = 0.1;
  return spec;
}

Outcome monotone_family() {
  const Foliation fol(headline_foliation());
  const double eps = 0.04, eta = fol.spec().eta;
  const MonotoneReport rep = check_monotone_in_s(fol, eps, {-eta, -eta / 2, 0.0, eta / 2, eta}, {eps * eps, 0.01});
  Index violations = 0;
  double worst = 0.0;
  for (const auto& r : rep.rows) {
    violations += r.violations;
    worst = std::max(worst, r.max_violation);
  }
  return {rep.passed() && rep.rows.size() == 8,
          std::to_string(violations) + " order violations above 1e-12 over " + std::to_string(rep.rows.size()) +
              " (s1, s2, t) pairs, largest u_s2 - u_s1 = " + num(worst)};
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig headline_config() {
  return parse_config(read_text(fs::path(FATTENLAB_CONFIG_DIR) / "figure_eight_study.cfg"), Command::Study);
}

fs::path artifact_root() {
  const fs::path root = fs::temp_directory_path() / "fattenlab_acceptance";
  fs::create_directories(root);
  return root;
}

Outcome headline() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = headline_config();
  set_thread_count(8);
  const StudyRun run = compute_study(cfg);
  const double secs = seconds_since(t0);
  std::ostringstream log;
  fs::remove_all(artifact_root() / "threads8");
  write_study(cfg, run, artifact_root() / "threads8", log);
  set_thread_count(1);

  const DiagonalStudy& st = run.study;
  bool shots = st.complete();
  double worst_res = 0.0, worst_nodal = 0.0, worst_sym = 0.0;
  for (const auto& e : st.entries) {
    shots = shots && e.shot.converged && e.shot.residual <= 1e-3;
    worst_res = std::max(worst_res, e.shot.residual);
    worst_nodal = std::max(worst_nodal, e.nodal_distance / (2 * e.solution.grid().spacing()));
  }
  for (double d : run.symmetry.deviation) worst_sym = std::max(worst_sym, d);
  const bool sym = !run.symmetry.deviation.empty() && worst_sym <= 1e-9;
  double excursion = 0.0;
  for (const auto& r : run.sandwich.rows) excursion = std::max({excursion, r.inner_excursion, r.outer_excursion});
  const bool ok = shots && st.nodal_ok() && sym && run.sandwich.passed() && secs <= 1800.0;
  std::string detail = "eps";
  for (double e : st.eps_list) detail += " " + num(e);
  detail += ": max residual " + num(worst_res) + " (limit 1e-3), nodal distance / 2h " + num(worst_nodal) +
            ", D2 deviation " + num(worst_sym) + ", sandwich " + (run.sandwich.passed() ? "pass" : "fail") +
            " (max excursion " + num(excursion) + "), " + num(secs) + " s (limit 1800)";
  if (!st.failure.empty()) detail += ", failure: " + st.failure;
  return {ok, detail};
}

Outcome discrepancy_decay() {
  std::vector<double> xi;
  std::string values;
  for (double eps : {0.08, 0.04, 0.02}) {
    const int points = static_cast<int>(std::lround(1.2 / (eps / 8)));
    const Grid g = Grid::box(2, -0.6, 0.6, points);
    const ACSolution sol = run_ac(signed_distance(Circle{Point2::Zero(), 0.4}, g), eps, {eps * eps});
    xi.push_back(energy_row(sol.snapshots.back(), eps).discrepancy_positive);
    values += (values.empty() ? "" : ", ") + num(xi.back());
  }
  const bool ok = xi[1] < xi[0] && xi[2] < xi[1];
  return {ok, "Xi+(eps^2) for eps 0.08, 0.04, 0.02 at eps/h = 8: " + values + " (must strictly decrease)"};
}

// Two walls at |s| = 1/4 on the unit torus, shifted so one of them passes
// through s = 0: the exact standing profile.
double wall(double s, double eps) {
  const double v = s + 0.25 - std::floor(s + 0.75);  // wrapped into [-1/2, 1/2)
  return std::tanh((0.25 - std::abs(v)) / eps);
}

Outcome density_calibration() {
  const double eps = 0.01;
  const Grid g(2, Point(-0.5, -0.5, 0.0), 1.0, 800, Boundary::periodic());
  const Field line = Field::from_function(g, [&](const Point& x) { return wall(x.y(), eps); });
  const Field cross = Field::from_function(g, [&](const Point& x) { return -wall(x.x(), eps) * wall(x.y(), eps); });
  // the crossing core removes O(eps / r) of the density, so r is taken well above eps
  const double r = 10 * eps, t0 = 2 * r * r;
  const double one = gaussian_density(line, Point::Zero(), t0, r, eps).value;
  const double two = gaussian_density(cross, Point::Zero(), t0, r, eps).value;
  return {std::abs(one - 1.0) <= 0.05 && std::abs(two - 2.0) <= 0.07 * 2.0,
          "r = 10 eps: single interface " + num(one) + " (1 +- 5%), crossing " + num(two) + " (2 +- 7%)"};
}

bool same_tree(const fs::path& a, const fs::path& b, int& files, std::string& first_diff) {
  std::set<fs::path> names;
  for (const fs::path& root : {a, b})
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) names.insert(fs::relative(e.path(), root));
  files = static_cast<int>(names.size());
  for (const auto& n : names) {
    if (!fs::exists(a / n) || !fs::exists(b / n) || read_text(a / n) != read_text(b / n)) {
      first_diff = n.string();
      return false;
    }
  }
  return files > 0;
}

Outcome determinism() {
  const fs::path eight = artifact_root() / "threads8";
  if (!fs::exists(eight / "manifest.txt")) headline();
  const RunConfig cfg = headline_config();
  set_thread_count(1);
  const StudyRun run = compute_study(cfg);
  std::ostringstream log;
  fs::remove_all(artifact_root() / "threads1");
  write_study(cfg, run, artifact_root() / "threads1", log);
  int files = 0;
  std::string diff;
  const bool ok = same_tree(eight, artifact_root() / "threads1", files, diff);
  return {ok, std::to_string(files) + " artifact files compared between 1 and 8 threads" +
                  (diff.empty() ? std::string(", all byte-identical") : ", first difference " + diff)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"standing-wave fidelity", standing_wave},
      {"circle radius law", radius_law},
      {"sup-norm and gradient bounds", sup_and_gradient},
      {"heat-flowed distance properties", dtilde_properties},
      {"barrier suite", barrier_suite},
      {"energy scaling, smooth case", energy_smooth},
      {"energy scaling, fractal case", energy_fractal},
      {"monotone family", monotone_family},
      {"headline shooting run", headline},
      {"discrepancy decay", discrepancy_decay},
      {"Gaussian density calibration", density_calibration},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << "): " << o.detail
              << " [" << num(seconds_since(t0)) << " s]" << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
