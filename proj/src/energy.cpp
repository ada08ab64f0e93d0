#include "fattenlab/energy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "fattenlab/field_io.hpp"
#include "fattenlab/geometry.hpp"
#include "fattenlab/kernels.hpp"

namespace fattenlab {

EnergyDensity energy_and_discrepancy(const Field& u, double eps) {
  require(eps > 0.0, "epsilon must be positive");
  const Field grad2 = gradient_norm_sq(u, Extension::phase_field(u.grid()));
  const auto pot = u.values().unaryExpr([](double v) { return potential(v); }) / eps;
  const auto kin = 0.5 * eps * grad2.values();
  return {Field(u.grid(), kin + pot, u.time()), Field(u.grid(), kin - pot, u.time())};
}

EnergyRow energy_row(const Field& u, double eps) {
  const Field grad2 = gradient_norm_sq(u, Extension::phase_field(u.grid()));
  const Field kin(u.grid(), 0.5 * eps * grad2.values(), u.time());
  const Field pot(u.grid(), u.values().unaryExpr([](double v) { return potential(v); }) / eps, u.time());
  const Field xi_plus(u.grid(), (kin.values() - pot.values()).max(0.0), u.time());
  EnergyRow row;
  row.t = u.time();
  row.kinetic = integrate(kin);
  row.potential = integrate(pot);
  row.energy = row.kinetic + row.potential;
  row.discrepancy_positive = integrate(xi_plus);
  return row;
}

PowerLawFit fit_power_law(const std::vector<double>& t, const std::vector<double>& value) {
  require(t.size() == value.size() && t.size() >= 2, "power-law fit needs at least two samples");
  Eigen::ArrayXd x(static_cast<Eigen::Index>(t.size())), y(x.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    require(t[i] > 0.0 && value[i] > 0.0, "power-law fit needs positive samples");
    x[static_cast<Eigen::Index>(i)] = std::log(t[i]);
    y[static_cast<Eigen::Index>(i)] = std::log(value[i]);
  }
  const double mx = x.mean(), my = y.mean();
  PowerLawFit fit;
  fit.exponent = ((x - mx) * (y - my)).sum() / (x - mx).square().sum();
  fit.prefactor = std::exp(my - fit.exponent * mx);
  fit.t_min = *std::min_element(t.begin(), t.end());
  fit.t_max = *std::max_element(t.begin(), t.end());
  fit.samples = static_cast<int>(t.size());
  return fit;
}

double EnergyReport::max_relative_increase(double t_min) const {
  double worst = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i - 1].t < t_min) continue;
    worst = std::max(worst, (rows[i].energy - rows[i - 1].energy) / rows[i - 1].energy);
  }
  return worst;
}

double EnergyReport::max_t_energy_sq() const {
  double m = 0.0;
  for (const auto& r : rows)
    if (r.t > 0.0 && r.t <= epsilon * epsilon * (1 + 1e-9)) m = std::max(m, r.t * r.energy * r.energy);
  return m;
}

EnergyReport total_energy_series(const ACSolution& sol) {
  const double eps = sol.params.epsilon;
  const double early_end = eps * eps * (1.0 + 1e-9);
  const auto early = std::count_if(sol.snapshots.begin(), sol.snapshots.end(),
                                   [&](const Field& u) { return u.time() > 0.0 && u.time() <= early_end; });
  require(early >= 4, "energy series needs at least 4 snapshots in (0, eps^2]");

  EnergyReport rep;
  rep.epsilon = eps;
  std::vector<double> ts, es;
  const double t_min = 4.0 * sol.dt;
  for (const Field& u : sol.snapshots) {
    rep.rows.push_back(energy_row(u, eps));
    const auto& r = rep.rows.back();
    if (r.t > t_min && r.t <= early_end) {
      ts.push_back(r.t);
      es.push_back(r.energy);
    }
  }
  require(ts.size() >= 2, "too few snapshots in (4 dt, eps^2] for the exponent fit");
  rep.early_fit = fit_power_law(ts, es);
  return rep;
}

void write_energy_report(const std::filesystem::path& path, const EnergyReport& rep) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "# t E kinetic potential discrepancy_plus\n";
  for (const auto& r : rep.rows)
    out << format_double(r.t) << ' ' << format_double(r.energy) << ' ' << format_double(r.kinetic) << ' '
        << format_double(r.potential) << ' ' << format_double(r.discrepancy_positive) << "\n";
  out << "# fit exponent " << format_double(rep.early_fit.exponent) << " prefactor "
      << format_double(rep.early_fit.prefactor) << " t_min " << format_double(rep.early_fit.t_min) << " t_max "
      << format_double(rep.early_fit.t_max) << " samples " << rep.early_fit.samples << "\n";
}

double interface_length_ratio(const Field& u, double eps) {
  const Contour c = contour_extract(u, 0.0);
  require(!c.empty(), "interface_length_ratio: empty zero contour");
  const double len = c.length();
  require(len > 0.0, "interface_length_ratio: zero-length contour");
  return integrate(energy_and_discrepancy(u, eps).density) / kSurfaceTension / len;
}

DensityProbe gaussian_density(const Field& u, const Point& x0, double t0, double r, double eps) {
  require(r > 0.0 && r * r < t0, "Gaussian density needs 0 < r^2 < t0");
  const Grid& g = u.grid();
  const int n = g.dim() - 1;
  const double norm = std::pow(4.0 * std::numbers::pi * r * r, -0.5 * n);
  const EnergyDensity e = energy_and_discrepancy(u, eps);
  Field weighted(g, 0.0, u.time());
  for (Index k = 0; k < g.size(); ++k) {
    const double d2 = (g.node(k) - x0).squaredNorm();
    weighted[k] = norm * std::exp(-d2 / (4.0 * r * r)) * e.density[k];
  }
  DensityProbe probe;
  probe.x0 = x0;
  probe.t0 = t0;
  probe.r = r;
  probe.t_used = u.time();
  probe.value = integrate(weighted) / kSurfaceTension;
  return probe;
}

DensityProbe gaussian_density(const ACSolution& sol, const Point& x0, double t0, double r) {
  require(r > 0.0 && r * r < t0, "Gaussian density needs 0 < r^2 < t0");
  require(!sol.snapshots.empty(), "solution has no snapshots");
  const double target = t0 - r * r;
  const Field* best = &sol.snapshots.front();
  for (const Field& u : sol.snapshots)
    if (std::abs(u.time() - target) < std::abs(best->time() - target)) best = &u;
  return gaussian_density(*best, x0, t0, r, sol.params.epsilon);
}

}  // namespace fattenlab
