#include "fattenlab/run.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "fattenlab/barriers.hpp"
#include "fattenlab/energy.hpp"
#include "fattenlab/field_io.hpp"
#include "fattenlab/lsf.hpp"
#include "fattenlab/parallel.hpp"
#include "fattenlab/shooting.hpp"

namespace fs = std::filesystem;

namespace fattenlab {

namespace {

const char* const kModules[] = {"grid_core", "geometry", "ac_solver", "barriers",
                                "energy",    "shooting", "lsf_reference", "cli"};

/// Collects the files of one artifact directory and writes its manifest last.
class ArtifactDir {
 public:
  ArtifactDir(fs::path dir, const RunConfig& cfg) : dir_(std::move(dir)), cfg_(cfg) { fs::create_directories(dir_); }

  const fs::path& path() const { return dir_; }

  fs::path file(const std::string& name, const std::string& what) {
    files_.emplace_back(name, what);
    return dir_ / name;
  }

  /// Opens `name` and hands the stream to `fill`.
  template <typename Fn>
  void text(const std::string& name, const std::string& what, Fn&& fill) {
    std::ofstream out(file(name, what));
    if (!out) throw ValidationError("cannot write " + (dir_ / name).string());
    fill(out);
  }

  void field(const std::string& stem, const Field& f, const std::string& what) {
    write_field(dir_ / stem, f);
    files_.emplace_back(stem + ".f64", what + ", t = " + format_double(f.time()));
    files_.emplace_back(stem + ".meta", "grid of " + stem + ".f64");
  }

  void param(const std::string& key, const std::string& value) { params_.emplace_back(key, value); }
  void param(const std::string& key, double value) { param(key, format_double(value)); }

  void write_manifest() const {
    std::ofstream out(dir_ / "manifest.txt");
    if (!out) throw ValidationError("cannot write " + (dir_ / "manifest.txt").string());
    out << "command = " << to_string(cfg_.command) << "\n";
    out << "config_hash = " << config_hash(cfg_.text) << "\n";
    out << "version = " << FATTENLAB_VERSION << "\n";
    for (const char* m : kModules) out << "module " << m << " = " << FATTENLAB_VERSION << "\n";
    for (const auto& [k, v] : params_) out << "param " << k << " = " << v << "\n";
    for (const auto& [name, what] : files_) out << "file " << name << " : " << what << "\n";
  }

 private:
  fs::path dir_;
  const RunConfig& cfg_;
  std::vector<std::pair<std::string, std::string>> files_;
  std::vector<std::pair<std::string, std::string>> params_;
};

std::string numbered(const std::string& prefix, std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", k);
  return prefix + buf;
}

void write_config_copy(ArtifactDir& dir, const RunConfig& cfg) {
  dir.text("config.txt", "configuration as given", [&](std::ostream& out) { out << cfg.text; });
}

void write_snapshots(ArtifactDir& dir, const std::vector<Field>& snaps, const std::string& what) {
  fs::create_directories(dir.path() / "snapshots");
  if (!snaps.empty() && snaps.front().grid().dim() == 2) fs::create_directories(dir.path() / "contours");
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    dir.field(numbered("snapshots/u_", k), snaps[k], what);
    if (snaps[k].grid().dim() != 2) continue;
    const std::string name = numbered("contours/zero_", k) + ".txt";
    write_contour(dir.file(name, "zero contour, t = " + format_double(snaps[k].time())), contour_extract(snaps[k], 0.0));
  }
}

void add_grid_params(ArtifactDir& dir, const RunConfig& cfg) {
  dir.param("dim", std::to_string(cfg.grid.dim));
  dir.param("points_per_axis", std::to_string(cfg.grid.points));
  dir.param("extent", format_double(cfg.grid.lo) + " " + format_double(cfg.grid.hi));
  dir.param("h", cfg.grid.grid().spacing());
}

void add_ac_params(ArtifactDir& dir, const ACSolution& sol) {
  dir.param("epsilon", sol.params.epsilon);
  dir.param("scheme", sol.params.scheme == Scheme::ExplicitEuler ? "explicit" : "semi_implicit");
  dir.param("dt", sol.dt);
  dir.param("steps", std::to_string(sol.steps));
  dir.param("t_end", sol.params.t_end);
}

EnergyReport energy_rows(const ACSolution& sol) {
  EnergyReport rep;
  rep.epsilon = sol.params.epsilon;
  for (const Field& u : sol.snapshots) rep.rows.push_back(energy_row(u, rep.epsilon));
  return rep;
}

void print_bounds(std::ostream& out, const BoundsReport& b) {
  out << "# t max_abs sup_limit max_grad grad_bound (K = " << format_double(b.k_slack) << ") pass\n";
  for (const auto& r : b.rows)
    out << format_double(r.t) << ' ' << format_double(r.max_abs) << ' ' << format_double(b.sup_limit) << ' '
        << format_double(r.max_grad) << ' ' << format_double(r.grad_bound) << ' '
        << (r.sup_ok && r.grad_ok ? "yes" : "no") << "\n";
}

ACSolution simulate_shape(const RunConfig& cfg, const SignedDistanceField& sdf) {
  // sharp indicator data, no pre-smoothing
  return evolve(leaf_initial_data(sdf, 0.0), ac_params(cfg, *cfg.ac.epsilon));
}

RunResult run_simulate(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const Grid g = cfg.grid.grid();
  const SignedDistanceField sdf = signed_distance(cfg.shape, g);
  const ACSolution sol = simulate_shape(cfg, sdf);
  const EnergyReport energy = energy_rows(sol);

  ArtifactDir dir(out_dir, cfg);
  write_config_copy(dir, cfg);
  add_grid_params(dir, cfg);
  add_ac_params(dir, sol);
  write_snapshots(dir, sol.snapshots, "phase field");
  write_energy_report(dir.file("energy.txt", "energy series"), energy);
  dir.write_manifest();
  log << "simulate: " << sol.snapshots.size() << " snapshots, " << sol.steps << " steps\n";
  return {};
}

RunResult run_verify(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const Grid g = cfg.grid.grid();
  const double eps = *cfg.ac.epsilon;
  const SignedDistanceField sdf = signed_distance(cfg.shape, g);
  const ACSolution sol = simulate_shape(cfg, sdf);
  const BoundsReport bounds = verify_solution_bounds(sol);
  // properties of d~ at the configured times; profile signs at the snapshots t <= eps^2
  const SmoothedDistance sd = compute_dtilde(sdf, cfg.verify.dtilde_times);
  std::vector<double> early;
  for (const Field& u : sol.snapshots)
    if (u.time() > 0.0 && u.time() <= eps * eps + 0.5 * sol.dt) early.push_back(u.time());
  require(!early.empty(), "verify needs a snapshot in (0, eps^2]");
  const BarrierReport signs = verify_residual_signs(compute_dtilde(sdf, early), eps, cfg.verify.shifts);
  const BarrierReport ubar = verify_u_barrier(sol, sdf);
  const BarrierReport gbar = verify_gradient_barrier(sol, sdf);

  RunResult res;
  if (!bounds.passed()) res.violations.push_back("solution bounds");
  if (!sd.passed()) res.violations.push_back("smoothed distance properties");
  if (!signs.passed()) res.violations.push_back("residual signs");
  if (!ubar.passed()) res.violations.push_back("u barrier");
  if (!gbar.passed()) res.violations.push_back("gradient barrier");

  ArtifactDir dir(out_dir, cfg);
  write_config_copy(dir, cfg);
  add_grid_params(dir, cfg);
  add_ac_params(dir, sol);
  dir.text("bounds.txt", "sup-norm and derivative bounds", [&](std::ostream& out) { print_bounds(out, bounds); });
  dir.text("dtilde.txt", "heat-flowed distance properties", [&](std::ostream& out) { print_dtilde_checks(out, sd); });
  write_barrier_report(dir.file("residual_signs.txt", "barrier profile residual signs"), signs);
  write_barrier_report(dir.file("u_barrier.txt", "u barrier"), ubar);
  write_barrier_report(dir.file("gradient_barrier.txt", "gradient barrier"), gbar);
  dir.param("violations", std::to_string(res.violations.size()));
  dir.write_manifest();
  log << "verify: barrier violations " << signs.violations() + ubar.violations() + gbar.violations()
      << ", bounds " << (bounds.passed() ? "ok" : "violated") << ", smoothed distance "
      << (sd.passed() ? "ok" : "violated") << "\n";
  return res;
}

RunResult run_energy(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const Grid g = cfg.grid.grid();
  const SignedDistanceField sdf = signed_distance(cfg.shape, g);
  const ACSolution sol = simulate_shape(cfg, sdf);
  const EnergyReport energy = total_energy_series(sol);
  const double t0 = cfg.density.t0 > 0.0 ? cfg.density.t0 : sol.snapshots.back().time();
  std::vector<DensityProbe> probes;
  for (const Point& x : cfg.density.points)
    for (double r : cfg.density.radii) probes.push_back(gaussian_density(sol, x, t0, r));
  const double ratio = g.dim() == 2 ? interface_length_ratio(sol.snapshots.back(), sol.params.epsilon) : 0.0;

  ArtifactDir dir(out_dir, cfg);
  write_config_copy(dir, cfg);
  add_grid_params(dir, cfg);
  add_ac_params(dir, sol);
  write_energy_report(dir.file("energy.txt", "energy series and early-time fit"), energy);
  dir.text("density.txt", "Gaussian density probes", [&](std::ostream& out) {
    out << "# x y z t0 r t_used theta\n";
    for (const auto& p : probes)
      out << format_double(p.x0.x()) << ' ' << format_double(p.x0.y()) << ' ' << format_double(p.x0.z()) << ' '
          << format_double(p.t0) << ' ' << format_double(p.r) << ' ' << format_double(p.t_used) << ' '
          << format_double(p.value) << "\n";
    if (g.dim() == 2) out << "# interface_length_ratio " << format_double(ratio) << "\n";
  });
  dir.write_manifest();
  log << "energy: fitted exponent " << format_double(energy.early_fit.exponent) << " over "
      << energy.early_fit.samples << " samples\n";
  return {};
}

FoliationSpec foliation_spec(const RunConfig& cfg) {
  FoliationSpec spec;
  spec.shape = cfg.shape;
  spec.grid = cfg.grid.grid();
  spec.eta = cfg.shooting.eta;
  spec.clamp = cfg.shooting.clamp;
  return spec;
}

void print_leaf_checks(std::ostream& out, const Foliation& fol) {
  out << "# s length total_turning max_turning lines ok\n";
  for (const auto& c : fol.leaf_checks())
    out << format_double(c.s) << ' ' << format_double(c.length) << ' ' << format_double(c.total_turning) << ' '
        << format_double(c.max_turning) << ' ' << c.lines << ' ' << (c.ok() ? "yes" : "no") << "\n";
}

RunResult run_shoot(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const Foliation fol(foliation_spec(cfg));
  const double eps = *cfg.ac.epsilon;
  const ShootingResult shot = bisect_leaf(fol, eps, cfg.shooting.x0, cfg.shooting.options);
  const Field u = fol.solution_at(shot.s_star, eps, cfg.shooting.x0.t);

  ArtifactDir dir(out_dir, cfg);
  write_config_copy(dir, cfg);
  add_grid_params(dir, cfg);
  dir.param("epsilon", eps);
  dir.param("eta", fol.spec().eta);
  write_shooting_result(dir.file("shooting.txt", "bisection result and history"), shot);
  dir.text("leaves.txt", "end-leaf smoothness", [&](std::ostream& out) { print_leaf_checks(out, fol); });
  dir.field("u_t0", u, "solution of the selected leaf");
  if (u.grid().dim() == 2) write_contour(dir.file("nodal.txt", "nodal contour at t0"), contour_extract(u, 0.0));
  dir.write_manifest();
  log << "shoot: s* = " << format_double(shot.s_star) << ", residual " << format_double(shot.residual) << ", "
      << shot.iterations << " iterations\n";
  RunResult res;
  if (!shot.converged) {
    res.exit_code = kExitNumerical;
    res.violations.push_back("bisection did not reach shoot_tol");
  }
  return res;
}

RunResult run_study(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  return write_study(cfg, compute_study(cfg), out_dir, log);
}

RunResult run_lsf(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const Grid g = cfg.grid.grid();
  const SignedDistanceField sdf = signed_distance(cfg.shape, g);
  LSFParams p;
  p.beta = cfg.lsf.beta;
  p.t_end = cfg.lsf.t_end;
  p.snapshot_times = cfg.lsf.snapshots;
  if (p.snapshot_times.empty())
    for (int i = 0; i <= 10; ++i) p.snapshot_times.push_back(p.t_end * i / 10.0);
  const LSFSolution sol = lsf_evolve(sdf.field, p);
  const FatteningSeries series = fattening_series(sol, cfg.lsf.band_cells * g.spacing());
  std::optional<EnvelopePair> env;
  if (cfg.lsf.delta > 0.0) env = inner_outer_envelopes(sdf, cfg.lsf.delta, p.snapshot_times, p.beta);

  ArtifactDir dir(out_dir, cfg);
  write_config_copy(dir, cfg);
  add_grid_params(dir, cfg);
  dir.param("beta", p.beta);
  dir.param("dt", sol.dt);
  dir.param("steps", std::to_string(sol.steps));
  fs::create_directories(out_dir / "contours");
  for (std::size_t k = 0; k < sol.snapshots.size(); ++k)
    write_contour(dir.file(numbered("contours/zero_", k) + ".txt",
                           "zero contour, t = " + format_double(sol.snapshots[k].time())),
                  contour_extract(sol.snapshots[k], 0.0));
  dir.text("fattening.txt", "fattening series", [&](std::ostream& out) { print_fattening_series(out, series); });
  if (env) {
    dir.file("envelopes/manifest.txt", "inner and outer level-set runs");
    ArtifactDir sub(out_dir / "envelopes", cfg);
    sub.param("delta", env->delta);
    sub.param("inner", "level-set flow of d + delta");
    sub.param("outer", "level-set flow of d - delta");
    for (std::size_t k = 0; k < env->times.size(); ++k) {
      const std::string t = format_double(env->times[k]);
      write_contour(sub.file(numbered("inner_", k) + ".txt", "inner envelope, t = " + t), env->inner[k]);
      write_contour(sub.file(numbered("outer_", k) + ".txt", "outer envelope, t = " + t), env->outer[k]);
    }
    sub.write_manifest();
  }
  dir.write_manifest();
  print_fattening_series(log, series);
  return {};
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot read config " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

StudyRun compute_study(const RunConfig& cfg) {
  require(cfg.command == Command::Study, "not a study config");
  StudyRun r;
  r.foliation = std::make_shared<const Foliation>(foliation_spec(cfg));
  const auto& sh = cfg.shooting;
  r.study = diagonal_study(*r.foliation, sh.x0, sh.eps_list, sh.options);
  r.symmetry = symmetry_and_multiplicity(r.study, sh.symmetry, sh.transversals);
  r.delta = sh.delta.value_or(sh.eta / 2.0);
  r.envelopes = inner_outer_envelopes(r.foliation->distance(), r.delta, {sh.x0.t});
  r.sandwich = sandwich_check(r.study, r.envelopes);
  return r;
}

RunResult write_study(const RunConfig& cfg, const StudyRun& run, const fs::path& out_dir, std::ostream& log) {
  const auto& sh = cfg.shooting;
  const DiagonalStudy& study = run.study;
  const SymmetryReport& sym = run.symmetry;
  const SandwichReport& sandwich = run.sandwich;
  const EnvelopePair& env = run.envelopes;
  const Foliation& fol = *run.foliation;
  const double delta = run.delta;

  RunResult res;
  if (!study.nodal_ok()) res.violations.push_back("nodal contour farther than 2h from x0");
  if (!study.mass_ok()) res.violations.push_back("local energy mass below sigma rho_loc");
  if (!sym.passed()) res.violations.push_back("symmetry deviation");
  if (!sandwich.passed()) res.violations.push_back("sandwich check");

  ArtifactDir dir(out_dir, cfg);
  write_config_copy(dir, cfg);
  add_grid_params(dir, cfg);
  dir.param("eta", sh.eta);
  dir.param("delta", delta);
  dir.param("t0", sh.x0.t);
  dir.text("summary.txt", "per-eps shooting summary", [&](std::ostream& out) { print_study_summary(out, study); });
  dir.text("symmetry.txt", "symmetry and multiplicity report", [&](std::ostream& out) { print_symmetry_report(out, sym); });
  dir.text("sandwich.txt", "sandwich check against the envelopes", [&](std::ostream& out) { print_sandwich_report(out, sandwich); });
  dir.text("leaves.txt", "end-leaf smoothness", [&](std::ostream& out) { print_leaf_checks(out, fol); });
  for (const auto& e : study.entries) {
    const std::string name = "eps_" + format_double(e.shot.epsilon);
    dir.file(name + "/manifest.txt", "run directory for eps = " + format_double(e.shot.epsilon));
    ArtifactDir sub(out_dir / name, cfg);
    sub.param("epsilon", e.shot.epsilon);
    sub.param("s_star", e.shot.s_star);
    sub.param("residual", e.shot.residual);
    sub.param("nodal_distance", e.nodal_distance);
    sub.param("local_mass", e.local_mass);
    write_shooting_result(sub.file("shooting.txt", "bisection result and history"), e.shot);
    write_contour(sub.file("nodal.txt", "nodal contour at t0"), e.nodal);
    sub.field("u_t0", e.solution, "solution of the selected leaf");
    sub.write_manifest();
  }
  {
    dir.file("envelopes/manifest.txt", "inner and outer level-set runs");
    ArtifactDir sub(out_dir / "envelopes", cfg);
    sub.param("delta", delta);
    sub.param("inner", "level-set flow of d + delta");
    sub.param("outer", "level-set flow of d - delta");
    sub.param("containment_excursion", env.containment_excursion());
    for (std::size_t k = 0; k < env.times.size(); ++k) {
      const std::string t = format_double(env.times[k]);
      write_contour(sub.file(numbered("inner_", k) + ".txt", "inner envelope, t = " + t), env.inner[k]);
      write_contour(sub.file(numbered("outer_", k) + ".txt", "outer envelope, t = " + t), env.outer[k]);
    }
    sub.write_manifest();
  }
  dir.param("violations", std::to_string(res.violations.size()));
  dir.write_manifest();

  print_study_summary(log, study);
  log << "sandwich " << (sandwich.passed() ? "pass" : "fail") << ", symmetry " << (sym.passed() ? "pass" : "fail")
      << "\n";
  if (!study.complete()) {
    res.exit_code = kExitNumerical;
    res.violations.push_back(study.failure);
  }
  return res;
}

fs::path resolve_output_dir(const RunConfig& cfg, const std::string& fallback_name, const fs::path& root) {
  const fs::path out = cfg.output.empty() ? fs::path(fallback_name) : fs::path(cfg.output);
  return out.is_absolute() ? out : root / out;
}

RunResult run(const RunConfig& cfg, const fs::path& out_dir, bool strict, std::ostream& log) {
  RunResult res;
  switch (cfg.command) {
    case Command::Simulate: res = run_simulate(cfg, out_dir, log); break;
    case Command::Shoot: res = run_shoot(cfg, out_dir, log); break;
    case Command::Study: res = run_study(cfg, out_dir, log); break;
    case Command::Verify: res = run_verify(cfg, out_dir, log); break;
    case Command::Energy: res = run_energy(cfg, out_dir, log); break;
    case Command::Lsf: res = run_lsf(cfg, out_dir, log); break;
  }
  if (res.exit_code == kExitOk && strict && !res.violations.empty()) res.exit_code = kExitViolation;
  return res;
}

int run_from_file(const std::string& command, const fs::path& config_path, bool strict, int threads,
                  std::ostream& out, std::ostream& err) {
  try {
    require(threads >= 1, "threads must be at least 1");
    const RunConfig cfg = parse_config(read_text(config_path), parse_command(command));
    set_thread_count(threads);
    const char* env_root = std::getenv(kOutputRootEnv);
    const fs::path root = env_root && *env_root ? fs::path(env_root) : fs::current_path();
    const fs::path dir = resolve_output_dir(cfg, config_path.stem().string(), root);

    const auto start = std::chrono::steady_clock::now();
    const RunResult res = run(cfg, dir, strict, out);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& v : res.violations) err << "violation: " << v << "\n";
    std::ostringstream took;
    took << std::fixed << std::setprecision(1) << secs;
    out << "artifacts in " << dir.string() << " (" << took.str() << " s)\n";
    return res.exit_code;
  } catch (const ValidationError& e) {
    err << "invalid: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const fs::filesystem_error& e) {
    err << "invalid: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const NumericalError& e) {
    err << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace fattenlab
