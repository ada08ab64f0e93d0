#include "fattenlab/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "fattenlab/field_io.hpp"
#include "fattenlab/kernels.hpp"

namespace fattenlab {

namespace {

bool clamped(const SignedDistanceField& sdf, Index n) { return std::abs(sdf.field[n]) >= sdf.clamp * (1.0 - 1e-12); }

/// Node whose Laplacian stencil reaches a ghost value.
bool on_boundary(const Grid& g, Index n) {
  if (g.periodic()) return false;
  const auto ijk = g.unravel(n);
  for (int a = 0; a < g.dim(); ++a) {
    const Index i = ijk[static_cast<std::size_t>(a)];
    if (i == 0 || i == g.points() - 1) return true;
  }
  return false;
}

double sech2(double a) {
  const double c = std::cosh(a);
  return std::isfinite(c) ? 1.0 / (c * c) : 0.0;
}

/// Running tally for one inequality; `excess` > 0 means the inequality is broken by that much.
struct Tally {
  BarrierRow row;
  void add(double excess) {
    ++row.checked;
    if (excess > row.tolerance) {
      ++row.violations;
      row.max_violation = std::max(row.max_violation, excess);
    }
  }
};

Tally tally(std::string check, std::string region, double t, double tol, bool enforced = true) {
  Tally out;
  out.row.check = std::move(check);
  out.row.region = std::move(region);
  out.row.t = t;
  out.row.tolerance = tol;
  out.row.enforced = enforced;
  return out;
}

std::string threshold(double k, const char* var) { return format_double(k) + " " + var; }

}  // namespace

bool SmoothedDistance::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const DtildeCheck& c) { return c.passed(); });
}

SmoothedDistance compute_dtilde(const SignedDistanceField& sdf, const std::vector<double>& times) {
  const Grid& g = sdf.grid();
  const Extension ext = Extension::distance(g);
  const double dmax = sdf.field.max_abs();
  SmoothedDistance sd;
  sd.base = sdf;
  for (double t : times) {
    require(t > 0.0, "d~ times must be positive");
    const double dt = t / 10.0;
    Field value = heat_convolve(sdf.field, t, ext);
    // fourth-order centred difference; creases of d make the second-order one too coarse at t/10
    Field rate(g, 0.0, t);
    rate.values() = (8.0 * (heat_convolve(sdf.field, t + dt, ext).values() - heat_convolve(sdf.field, t - dt, ext).values()) -
                     (heat_convolve(sdf.field, t + 2 * dt, ext).values() - heat_convolve(sdf.field, t - 2 * dt, ext).values())) /
                    (12.0 * dt);

    DtildeCheck c;
    c.t = t;
    c.max_grad = std::sqrt(gradient_norm_sq(value, ext).values().maxCoeff());
    c.grad_limit = 1.0 + 3.0 * g.spacing();
    c.max_gap = (value.values() - sdf.field.values()).abs().maxCoeff();
    c.gap_bound = std::sqrt(2.0 * g.dim() * t);
    c.gap_bound_tight = std::sqrt(g.dim() * t);
    const Field lap = laplacian(value, ext);
    for (Index n = 0; n < g.size(); ++n)
      if (!on_boundary(g, n)) c.max_caloric = std::max(c.max_caloric, std::abs(rate[n] - lap[n]));
    c.caloric_limit = 5e-2 * dmax;

    sd.times.push_back(t);
    sd.values.push_back(std::move(value));
    sd.rates.push_back(std::move(rate));
    sd.checks.push_back(c);
  }
  return sd;
}

BarrierProfiles eval_barrier_profiles(const Field& dtilde, double eps, double t, double c) {
  require(eps > 0.0 && t > 0.0, "barrier profiles need eps > 0 and t > 0");
  const double rt = std::sqrt(t);
  BarrierProfiles p;
  p.g = Field(dtilde.grid(), dtilde.values().unaryExpr([&](double d) { return std::tanh(d / eps); }), t);
  p.g_tilde = Field(dtilde.grid(), dtilde.values().unaryExpr([&](double d) { return std::tanh(d / rt - c); }), t);
  p.psi = Field(dtilde.grid(), dtilde.values().unaryExpr([&](double d) { return std::exp(-d * d / (2.0 * t)) / t; }), t);
  return p;
}

bool BarrierReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const BarrierRow& r) { return !r.enforced || r.violations == 0; });
}

Index BarrierReport::violations() const {
  Index n = 0;
  for (const auto& r : rows)
    if (r.enforced) n += r.violations;
  return n;
}

BarrierReport verify_residual_signs(const SmoothedDistance& sd, double eps, const std::vector<double>& shifts) {
  const SignedDistanceField& sdf = sd.base;
  const Grid& grid = sdf.grid();
  const Extension ext = Extension::distance(grid);
  const double tol = 1e-3 * 2.0 / (eps * eps);
  const double e2 = eps * eps;
  BarrierReport rep;

  for (std::size_t k = 0; k < sd.times.size(); ++k) {
    const double t = sd.times[k], rt = std::sqrt(t);
    const Field& d = sd.values[k];
    const Field& rate = sd.rates[k];
    const Field lap = laplacian(d, ext);
    const Field grad2 = gradient_norm_sq(d, ext);

    Tally g_sub = tally("g sub", "d~ > 0", t, tol), g_super = tally("g super", "d~ < 0", t, tol);
    std::vector<Tally> gt_sub, gt_super;
    for (double c : shifts) {
      gt_sub.push_back(tally("g~ sub C=" + format_double(c), "d~ > " + threshold(4.0, "sqrt(t)"), t, tol));
      gt_super.push_back(tally("g~ super C=" + format_double(c), "d~ < -" + threshold(4.0, "sqrt(t)"), t, tol));
    }
    Tally psi = tally("psi supercaloric", "|d~| > " + threshold(5.0, "sqrt(t)"), t, tol, false);

    for (Index n = 0; n < grid.size(); ++n) {
      if (clamped(sdf, n)) continue;
      const double D = d[n], caloric = rate[n] - lap[n], G2 = grad2[n];

      // g = tanh(D/eps)
      const double a = D / eps, s2 = sech2(a);
      const double res_g = s2 * caloric / eps + 2.0 / e2 * (G2 - 1.0) * s2 * std::tanh(a);
      if (D > 0.0) g_sub.add(res_g);
      if (D < 0.0) g_super.add(-res_g);

      // g~ = tanh(D/sqrt(t) -+ C)
      for (std::size_t j = 0; j < shifts.size(); ++j) {
        if (std::abs(D) <= 4.0 * rt) continue;
        const double b = D / rt - std::copysign(shifts[j], D), sb = sech2(b);
        const double res = sb * (caloric / rt - D / (2.0 * t * rt) + 2.0 * std::tanh(b) * (G2 / t - 1.0 / e2));
        if (D > 0.0)
          gt_sub[j].add(res);
        else
          gt_super[j].add(-res);
      }

      // psi = exp(-D^2/2t)/t under (dt - Lap)
      if (std::abs(D) > 5.0 * rt) {
        const double e = std::exp(-D * D / (2.0 * t)) / t;
        const double res = e * (-1.0 / t - D * caloric / t + D * D / (2.0 * t * t) + G2 / t - D * D * G2 / (t * t));
        psi.add(-res);
      }
    }
    rep.rows.push_back(g_sub.row);
    rep.rows.push_back(g_super.row);
    for (std::size_t j = 0; j < shifts.size(); ++j) {
      rep.rows.push_back(gt_sub[j].row);
      rep.rows.push_back(gt_super[j].row);
    }
    rep.rows.push_back(psi.row);
  }
  return rep;
}

BarrierReport verify_u_barrier(const ACSolution& sol, const SignedDistanceField& sdf) {
  require(sol.initial.grid() == sdf.grid(), "solution and distance live on different grids");
  const int dim = sdf.grid().dim();
  const double k = 5.0 * std::sqrt(static_cast<double>(dim));
  BarrierReport rep;
  for (const Field& u : sol.snapshots) {
    const double t = u.time();
    if (t <= 0.0) continue;
    const double rt = std::sqrt(t);
    Tally pos = tally("u barrier below", "d >= " + threshold(k, "sqrt(t)"), t, 1e-6);
    Tally neg = tally("u barrier above", "d <= -" + threshold(k, "sqrt(t)"), t, 1e-6);
    for (Index n = 0; n < u.size(); ++n) {
      if (clamped(sdf, n)) continue;
      const double d = sdf.field[n];
      if (d >= k * rt) pos.add(std::tanh(d / rt - k) - u[n]);
      if (d <= -k * rt) neg.add(u[n] - std::tanh(d / rt + k));
    }
    rep.rows.push_back(pos.row);
    rep.rows.push_back(neg.row);
  }
  return rep;
}

double gradient_barrier_constant(int dim) { return 2.0 * std::exp(25.0 * dim / 2.0) * std::exp(-dim / 2.0); }

BarrierReport verify_gradient_barrier(const ACSolution& sol, const SignedDistanceField& sdf) {
  require(sol.initial.grid() == sdf.grid(), "solution and distance live on different grids");
  const int dim = sdf.grid().dim();
  const double k = 6.0 * std::sqrt(static_cast<double>(dim));
  const double log_c = std::log(gradient_barrier_constant(dim));
  const double eps2 = sol.params.epsilon * sol.params.epsilon;
  BarrierReport rep;
  for (const Field& u : sol.snapshots) {
    const double t = u.time();
    // a snapshot requested at eps^2 lands within half a step of it
    if (t <= 0.0 || t > eps2 + 0.5 * sol.dt) continue;
    const double rt = std::sqrt(t);
    const Field grad2 = gradient_norm_sq(u, Extension::phase_field(u.grid()));
    Tally row = tally("gradient barrier", "|d| >= " + threshold(k, "sqrt(t)"), t, 1e-12);
    double log_fit = -std::numeric_limits<double>::infinity();
    for (Index n = 0; n < u.size(); ++n) {
      if (clamped(sdf, n)) continue;
      const double d = sdf.field[n];
      if (std::abs(d) < k * rt) continue;
      const double exponent = log_c - std::log(t) - d * d / (3.0 * t);
      row.add(grad2[n] - std::exp(exponent));
      if (grad2[n] > 0.0) log_fit = std::max(log_fit, std::log(grad2[n]) + std::log(t) + d * d / (3.0 * t));
    }
    row.row.log10_c_fit = log_fit / std::log(10.0);
    rep.rows.push_back(row.row);
  }
  return rep;
}

void print_dtilde_checks(std::ostream& out, const SmoothedDistance& sd) {
  out << "# t max_grad grad_limit max_gap sqrt(2dim t) sqrt(dim t) max_caloric caloric_limit pass\n";
  for (const auto& c : sd.checks)
    out << format_double(c.t) << ' ' << format_double(c.max_grad) << ' ' << format_double(c.grad_limit) << ' '
        << format_double(c.max_gap) << ' ' << format_double(c.gap_bound) << ' ' << format_double(c.gap_bound_tight)
        << ' ' << format_double(c.max_caloric) << ' ' << format_double(c.caloric_limit) << ' '
        << (c.passed() ? "yes" : "no") << "\n";
}

void print_barrier_report(std::ostream& out, const BarrierReport& rep) {
  out << "# t | check | region | checked | violations | max_violation | tolerance | enforced | log10_C_fit\n";
  for (const auto& r : rep.rows)
    out << format_double(r.t) << " | " << r.check << " | " << r.region << " | " << r.checked << " | " << r.violations
        << " | " << format_double(r.max_violation) << " | " << format_double(r.tolerance) << " | "
        << (r.enforced ? "yes" : "no") << " | " << (r.check == "gradient barrier" ? format_double(r.log10_c_fit) : "-")
        << "\n";
}

void write_barrier_report(const std::filesystem::path& path, const BarrierReport& rep) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  print_barrier_report(out, rep);
}

}  // namespace fattenlab
