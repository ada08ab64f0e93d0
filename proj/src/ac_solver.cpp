#include "fattenlab/ac_solver.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "fattenlab/kernels.hpp"

namespace fattenlab {

namespace {

void check_finite(const Field& u, Index step_index) {
  if (!u.all_finite()) {
    std::ostringstream msg;
    msg << "Allen-Cahn solution became non-finite at step " << step_index << " (t = " << u.time() << ")";
    throw NumericalError(msg.str());
  }
}

/// Explicit update fused into one pass over the rows.
void explicit_step(const Field& u, Field& out, double dt, double eps) {
  const Grid& g = u.grid();
  const Index p = g.points();
  const int dim = g.dim();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  const double diag = 2.0 * dim;
  const double k = dt / (eps * eps);
  detail::for_each_row(u, Extension::phase_field(g),
                       [&](Index r, const double* c, double left, double right, const auto& nb) {
                         double* o = out.data() + r * p;
                         const double* ym = nb.prev(1);
                         const double* yp = nb.next(1);
                         const double* zm = dim == 3 ? nb.prev(2) : nullptr;
                         const double* zp = dim == 3 ? nb.next(2) : nullptr;
                         for (Index i = 0; i < p; ++i) {
                           const double xm = i == 0 ? left : c[i - 1];
                           const double xp = i == p - 1 ? right : c[i + 1];
                           double nsum = xm + xp + ym[i] + yp[i];
                           if (zm) nsum += zm[i] + zp[i];
                           const double v = c[i];
                           const double lap = (nsum - diag * v) * inv_h2;
                           o[i] = v + dt * lap - k * reaction(v);
                         }
                       });
}

/// Solves (I - dt Lap) x = b on a periodic grid by diagonalising with the DFT.
void periodic_solve(const Grid& g, double dt, Field& x) {
  const Index p = g.points();
  const int dim = g.dim();
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> data(static_cast<std::size_t>(g.size()));
  for (Index n = 0; n < g.size(); ++n) data[static_cast<std::size_t>(n)] = x[n];

  std::vector<std::complex<double>> line(static_cast<std::size_t>(p)), spec(static_cast<std::size_t>(p));
  auto transform = [&](bool forward) {
    for (int axis = 0; axis < dim; ++axis) {
      const Index stride = g.stride(axis);
      const Index lines = g.size() / p;
      for (Index l = 0; l < lines; ++l) {
        const Index base = (l % stride) + (l / stride) * stride * p;
        for (Index i = 0; i < p; ++i) line[static_cast<std::size_t>(i)] = data[static_cast<std::size_t>(base + i * stride)];
        if (forward)
          fft.fwd(spec, line);
        else
          fft.inv(spec, line);
        for (Index i = 0; i < p; ++i) data[static_cast<std::size_t>(base + i * stride)] = spec[static_cast<std::size_t>(i)];
      }
    }
  };
  transform(true);
  const double h2 = g.spacing() * g.spacing();
  std::vector<double> sym(static_cast<std::size_t>(p));
  for (Index m = 0; m < p; ++m) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(m) / static_cast<double>(p));
    sym[static_cast<std::size_t>(m)] = 4.0 * s * s / h2;
  }
  for (Index n = 0; n < g.size(); ++n) {
    const auto ijk = g.unravel(n);
    double lam = 0.0;
    for (int a = 0; a < dim; ++a) lam += sym[static_cast<std::size_t>(ijk[static_cast<std::size_t>(a)])];
    data[static_cast<std::size_t>(n)] /= (1.0 + dt * lam);
  }
  transform(false);
  for (Index n = 0; n < g.size(); ++n) x[n] = data[static_cast<std::size_t>(n)].real();
}

/// Solves (I - dt Lap) x = b with far-field constant ghosts by conjugate gradients.
void far_field_solve(const Grid& g, double dt, const Field& b_in, Field& x) {
  const Extension zero = Extension::constant(0.0);
  // ghost contributions move to the right-hand side
  Field b = b_in;
  b.values() += dt * laplacian(Field(g, 0.0), Extension::phase_field(g)).values();
  auto apply = [&](const Field& v) {
    Field av = v;
    av.values() -= dt * laplacian(v, zero).values();
    return av;
  };
  Field r = b;
  r.values() -= apply(x).values();
  Field d = r;
  double rr = (r.values() * r.values()).sum();
  const double target = 1e-10 * std::sqrt((b.values() * b.values()).sum());
  for (int it = 0; it < 10000 && std::sqrt(rr) > target; ++it) {
    const Field ad = apply(d);
    const double alpha = rr / (d.values() * ad.values()).sum();
    x.values() += alpha * d.values();
    r.values() -= alpha * ad.values();
    const double rr_new = (r.values() * r.values()).sum();
    d.values() = r.values() + (rr_new / rr) * d.values();
    rr = rr_new;
  }
  if (!(std::sqrt(rr) <= target)) throw NumericalError("semi-implicit solve did not reach residual 1e-10");
}

}  // namespace

double default_time_step(const Grid& grid, double epsilon) {
  const double h = grid.spacing();
  return std::min(h * h / (4.0 * grid.dim()), epsilon * epsilon / 8.0);
}

double time_step(const ACParams& p, const Grid& grid) { return p.dt > 0.0 ? p.dt : default_time_step(grid, p.epsilon); }

void validate(const ACParams& p, const Grid& grid) {
  require(p.epsilon > 0.0 && p.epsilon < 1.0, "epsilon must be in (0,1)");
  require(p.epsilon >= 4.0 * grid.spacing() * (1.0 - 1e-12), "epsilon must be at least 4h (resolution guard)");
  require(p.dt >= 0.0 && std::isfinite(p.dt), "dt must be non-negative");
  const double dt = time_step(p, grid);
  if (p.scheme == Scheme::ExplicitEuler)
    require(dt <= default_time_step(grid, p.epsilon) * (1.0 + 1e-12),
            "dt violates the explicit bound min(h^2/(4 dim), eps^2/8)");
  require(p.t_end >= 0.0, "t_end must be non-negative");
  require(std::is_sorted(p.snapshot_times.begin(), p.snapshot_times.end()), "snapshot_times must be sorted");
  for (double t : p.snapshot_times)
    require(t >= 0.0 && t <= p.t_end * (1.0 + 1e-12), "snapshot_times must lie in [0, t_end]");
}

Field step(const Field& u, const ACParams& p) {
  validate(p, u.grid());
  const double dt = time_step(p, u.grid());
  Field out(u.grid(), 0.0, u.time() + dt);
  if (p.scheme == Scheme::ExplicitEuler) {
    explicit_step(u, out, dt, p.epsilon);
  } else {
    const double k = dt / (p.epsilon * p.epsilon);
    Field rhs = u;
    rhs.values() -= k * u.values().unaryExpr([](double v) { return reaction(v); });
    out.values() = rhs.values();
    if (u.grid().periodic())
      periodic_solve(u.grid(), dt, out);
    else
      far_field_solve(u.grid(), dt, rhs, out);
  }
  if (!out.all_finite()) throw NumericalError("Allen-Cahn step produced non-finite values");
  return out;
}

ACSolution evolve(const Field& u0, const ACParams& p, const StepObserver& observer) {
  const Grid& g = u0.grid();
  validate(p, g);
  require(u0.all_finite(), "initial data must be finite");
  const double dt = time_step(p, g);

  ACSolution sol;
  sol.params = p;
  sol.dt = dt;
  sol.initial = u0;
  sol.initial.set_time(0.0);

  std::vector<Index> at_step;
  for (double t : p.snapshot_times) at_step.push_back(static_cast<Index>(std::llround(t / dt)));
  const Index total = std::max(static_cast<Index>(std::llround(p.t_end / dt)), at_step.empty() ? 0 : at_step.back());

  Field cur = sol.initial;
  Field next(g, 0.0, 0.0);
  std::size_t snap = 0;
  auto capture = [&](Index n) {
    while (snap < at_step.size() && at_step[snap] == n) {
      sol.snapshots.push_back(cur);
      ++snap;
    }
  };
  capture(0);
  ACParams one = p;
  one.dt = dt;
  for (Index n = 1; n <= total; ++n) {
    if (p.scheme == Scheme::ExplicitEuler) {
      explicit_step(cur, next, dt, p.epsilon);
      next.set_time(static_cast<double>(n) * dt);
      std::swap(cur, next);
      if (n % 256 == 0 || n == total) check_finite(cur, n);
    } else {
      cur = step(cur, one);
      cur.set_time(static_cast<double>(n) * dt);
    }
    if (observer) observer(cur);
    if (snap < at_step.size() && at_step[snap] == n) check_finite(cur, n);
    capture(n);
  }
  sol.steps = total;
  return sol;
}

bool BoundsReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const BoundsRow& r) { return r.sup_ok && r.grad_ok; });
}

BoundsReport verify_solution_bounds(const ACSolution& sol, double k_slack) {
  BoundsReport rep;
  rep.k_slack = k_slack;
  rep.sup_limit = std::max(sol.initial.max_abs(), 1.0);
  const double eps = sol.params.epsilon;
  for (const Field& u : sol.snapshots) {
    const double t = u.time();
    if (t <= 0.0) continue;
    BoundsRow row;
    row.t = t;
    row.max_abs = u.max_abs();
    row.max_grad = std::sqrt(gradient_norm_sq(u, Extension::phase_field(u.grid())).values().maxCoeff());
    row.grad_bound = k_slack * (1.0 / std::sqrt(t) + std::sqrt(t) / (eps * eps));
    row.sup_ok = row.max_abs <= rep.sup_limit + 1e-9;
    row.grad_ok = row.max_grad <= row.grad_bound;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace fattenlab
