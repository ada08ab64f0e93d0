#pragma once

#include <functional>
#include <vector>

#include "fattenlab/grid.hpp"

namespace fattenlab {

/// Double-well potential F(u) = (1 - u^2)^2 / 2.
inline double potential(double u) {
  const double w = 1.0 - u * u;
  return 0.5 * w * w;
}

/// f = F' = 2u(u^2 - 1).
inline double reaction(double u) { return 2.0 * u * (u * u - 1.0); }

/// Surface tension of the standing profile: integral of sqrt(2F) over [-1, 1].
inline constexpr double kSurfaceTension = 4.0 / 3.0;

enum class Scheme { ExplicitEuler, SemiImplicit };

struct ACParams {
  double epsilon = 0.02;
  double dt = 0.0;  ///< 0 selects default_time_step
  Scheme scheme = Scheme::ExplicitEuler;
  double t_end = 0.0;
  std::vector<double> snapshot_times;
};

/// min(h^2 / (4 dim), eps^2 / 8): the largest step for which the explicit
/// scheme is monotone.
double default_time_step(const Grid& grid, double epsilon);

/// Resolved time step for these parameters on this grid.
double time_step(const ACParams& p, const Grid& grid);

/// Checks the parameter ranges and the explicit-step constraint.
void validate(const ACParams& p, const Grid& grid);

/// One step of du/dt = Lap u - f(u) / eps^2.
Field step(const Field& u, const ACParams& p);

struct ACSolution {
  ACParams params;
  double dt = 0.0;
  Field initial;
  std::vector<Field> snapshots;  ///< at snapshot_times rounded to whole steps
  Index steps = 0;
};

/// Called after every step with the current field.
using StepObserver = std::function<void(const Field&)>;

/// Integrates from u0 (taken as-is, including discontinuous indicator data)
/// and records snapshots at the nearest step boundaries.
ACSolution evolve(const Field& u0, const ACParams& p, const StepObserver& observer = {});

struct BoundsRow {
  double t = 0.0;
  double max_abs = 0.0;
  double max_grad = 0.0;
  double grad_bound = 0.0;
  bool sup_ok = true;
  bool grad_ok = true;
};

/// Sup-norm bound max|u| <= max(max|u0|, 1) and the derivative estimate
/// max|grad u| <= K (1/sqrt(t) + sqrt(t)/eps^2) at every snapshot with t > 0.
struct BoundsReport {
  double k_slack = 3.0;
  double sup_limit = 1.0;
  std::vector<BoundsRow> rows;

  bool passed() const;
};

BoundsReport verify_solution_bounds(const ACSolution& sol, double k_slack = 3.0);

}  // namespace fattenlab
