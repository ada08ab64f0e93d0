#pragma once

#include <filesystem>
#include <vector>

#include "fattenlab/ac_solver.hpp"
#include "fattenlab/grid.hpp"

namespace fattenlab {

/// Nodal energy density e = eps|grad u|^2/2 + F(u)/eps and discrepancy
/// xi = eps|grad u|^2/2 - F(u)/eps.
struct EnergyDensity {
  Field density;
  Field discrepancy;
};

/// |grad u|^2 by central differences with the phase-field extension.
EnergyDensity energy_and_discrepancy(const Field& u, double eps);

struct EnergyRow {
  double t = 0.0;
  double energy = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double discrepancy_positive = 0.0;  ///< integral of max(xi, 0)
};

EnergyRow energy_row(const Field& u, double eps);

/// E(t) ~ A t^p by least squares in log-log.
struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  int samples = 0;
};

PowerLawFit fit_power_law(const std::vector<double>& t, const std::vector<double>& value);

struct EnergyReport {
  double epsilon = 0.0;
  std::vector<EnergyRow> rows;
  PowerLawFit early_fit;  ///< over snapshots with 4 dt < t <= eps^2

  /// Largest relative increase of E between consecutive rows with t >= t_min.
  double max_relative_increase(double t_min) const;
  /// sup of t E(t)^2 over rows with 0 < t <= eps^2.
  double max_t_energy_sq() const;
};

/// Energy series over every snapshot plus the early-time exponent fit.
/// Needs at least four snapshots in (0, eps^2].
EnergyReport total_energy_series(const ACSolution& sol);

void write_energy_report(const std::filesystem::path& path, const EnergyReport& rep);

/// (integral of e / sigma) / length of {u = 0}; ~ multiplicity of the interface.
double interface_length_ratio(const Field& u, double eps);

/// Gaussian density Theta at X0 = (x0, t0) and scale r, from the energy
/// measure at time t0 - r^2 normalised by sigma:
///   Theta = (1/sigma) int (4 pi r^2)^{-n/2} exp(-|x - x0|^2 / 4r^2) e(x) dx,
/// with n = dim - 1.
struct DensityProbe {
  Point x0 = Point::Zero();
  double t0 = 0.0;
  double r = 0.0;
  double t_used = 0.0;  ///< time of the field actually integrated
  double value = 0.0;
};

DensityProbe gaussian_density(const Field& u, const Point& x0, double t0, double r, double eps);

/// Uses the snapshot nearest to t0 - r^2.
DensityProbe gaussian_density(const ACSolution& sol, const Point& x0, double t0, double r);

}  // namespace fattenlab
