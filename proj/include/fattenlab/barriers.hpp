#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fattenlab/ac_solver.hpp"
#include "fattenlab/geometry.hpp"

namespace fattenlab {

/// Property checks attached to one heat-flowed distance field.
struct DtildeCheck {
  double t = 0.0;
  double max_grad = 0.0;       ///< max |grad d~|
  double grad_limit = 0.0;     ///< 1 + 3h
  double max_gap = 0.0;        ///< max |d - d~|
  double gap_bound = 0.0;      ///< sqrt(2 dim t), the checked bound
  double gap_bound_tight = 0.0;  ///< sqrt(dim t), reported only
  double max_caloric = 0.0;    ///< max |(dt - Lap) d~|
  double caloric_limit = 0.0;  ///< 5e-2 max|d|

  bool grad_ok() const { return max_grad <= grad_limit; }
  bool gap_ok() const { return max_gap <= gap_bound; }
  bool tight_gap_ok() const { return max_gap <= gap_bound_tight; }
  bool caloric_ok() const { return max_caloric <= caloric_limit; }
  bool passed() const { return grad_ok() && gap_ok() && caloric_ok(); }
};

/// Heat flow d~(., t) of the clamped signed distance at a list of times,
/// with the time derivative by centred differences of spacing t/10
/// (five points). The caloric residual skips nodes whose stencil uses ghosts.
struct SmoothedDistance {
  SignedDistanceField base;
  std::vector<double> times;
  std::vector<Field> values;
  std::vector<Field> rates;
  std::vector<DtildeCheck> checks;

  bool passed() const;
};

/// Throws "time too large for domain" when a kernel (at 1.2 t) does not fit.
SmoothedDistance compute_dtilde(const SignedDistanceField& sdf, const std::vector<double>& times);

/// g = tanh(d~/eps), g~ = tanh(d~/sqrt(t) - C), psi = exp(-d~^2 / 2t) / t.
struct BarrierProfiles {
  Field g;
  Field g_tilde;
  Field psi;
};

BarrierProfiles eval_barrier_profiles(const Field& dtilde, double eps, double t, double c);

/// One verified inequality on one field.
struct BarrierRow {
  std::string check;
  std::string region;
  double t = 0.0;
  Index checked = 0;
  Index violations = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool enforced = true;  ///< informational rows do not affect passed()
  double log10_c_fit = 0.0;  ///< gradient barrier only
};

struct BarrierReport {
  std::vector<BarrierRow> rows;

  bool passed() const;
  Index violations() const;  ///< over enforced rows
};

/// Residual signs of the profiles under (dt - Lap) + f(.)/eps^2, assembled by
/// the chain rule from finite differences of d~:
///   g  sub on d~ > 0, super on d~ < 0;
///   g~ sub on d~ > 4 sqrt(t), super on d~ < -4 sqrt(t), for each C in `shifts`
///      (mirrored to tanh(d~/sqrt(t) + C) on the negative side);
///   psi under (dt - Lap) on |d~| > 5 sqrt(t), reported but not enforced.
/// Tolerance 1e-3 * 2/eps^2; nodes with |d| at the clamp are skipped.
BarrierReport verify_residual_signs(const SmoothedDistance& sd, double eps, const std::vector<double>& shifts);

/// u >= tanh(d/sqrt(t) - 5 sqrt(dim)) on d >= 5 sqrt(dim) sqrt(t) and the
/// mirror bound on the negative side, tolerance 1e-6, every snapshot t > 0.
BarrierReport verify_u_barrier(const ACSolution& sol, const SignedDistanceField& sdf);

/// C = 2 exp(25 dim / 2) exp(-dim / 2).
double gradient_barrier_constant(int dim);

/// |Du|^2 <= (C/t) exp(-d^2 / 3t) on |d| >= 6 sqrt(dim) sqrt(t) for snapshots
/// with 0 < t <= eps^2 (+ dt/2), absolute tolerance 1e-12. Each row carries
/// log10 of the smallest C that would make the bound hold on that snapshot.
BarrierReport verify_gradient_barrier(const ACSolution& sol, const SignedDistanceField& sdf);

/// Text tables.
void print_dtilde_checks(std::ostream& out, const SmoothedDistance& sd);
void print_barrier_report(std::ostream& out, const BarrierReport& rep);
void write_barrier_report(const std::filesystem::path& path, const BarrierReport& rep);

}  // namespace fattenlab
