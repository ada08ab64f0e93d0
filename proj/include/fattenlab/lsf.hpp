#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "fattenlab/geometry.hpp"
#include "fattenlab/grid.hpp"

namespace fattenlab {

struct DiagonalStudy;

struct LSFParams {
  double beta = 1e-6;  ///< floor in |grad phi|^2 + beta
  double dt = 0.0;     ///< 0 selects h^2 / (8 dim)
  double t_end = 0.0;
  std::vector<double> snapshot_times;
};

double lsf_default_time_step(const Grid& grid);

/// One explicit step of
///   phi_t = Lap phi - (grad phi . D^2 phi grad phi) / (|grad phi|^2 + beta)
/// with centred differences and linear continuation outside the box.
Field lsf_step(const Field& phi, double beta, double dt);

struct LSFSolution {
  LSFParams params;
  double dt = 0.0;
  Field initial;
  std::vector<Field> snapshots;  ///< at snapshot_times rounded to whole steps
  std::vector<double> band_gradient;  ///< mean |grad phi| on {|phi| < 2h} per snapshot
  Index steps = 0;
};

/// Throws ValidationError for beta outside [1e-8, 1e-4] or dt above h^2/(8 dim),
/// NumericalError when phi stops being finite.
LSFSolution lsf_evolve(const Field& phi0, const LSFParams& p);

struct FatteningRow {
  double t = 0.0;
  double band = 0.0;
  double band_area = 0.0;    ///< area of {|phi| < band}
  double zero_length = 0.0;  ///< length of {phi = 0}
  double zero_slope = 0.0;   ///< median |grad phi| on {phi = 0}
  double tube_area = 0.0;    ///< 2 band length / zero_slope
  double excess = 0.0;       ///< band_area - tube_area
  double noise_floor = 0.0;  ///< h length / 2
  double threshold = 0.0;    ///< 4 h length

  bool detected() const { return excess > noise_floor; }
  bool fattened() const { return excess > threshold; }
};

/// Band excess of one field (2-D).
FatteningRow fattening_measure(const Field& phi, double band);

struct FatteningSeries {
  std::vector<FatteningRow> rows;
  std::optional<double> t_detect;  ///< first snapshot t > 0 with excess above the noise floor
  std::optional<double> t_fat;     ///< first snapshot with excess above threshold
};

/// band >= h.
FatteningSeries fattening_series(const LSFSolution& sol, double band);

/// Zero sets of the level-set flows from d + delta (inner, the larger region
/// bounded by M_{-delta}) and d - delta (outer, bounded by M_{+delta}).
struct EnvelopePair {
  double delta = 0.0;
  std::vector<double> times;  ///< requested times
  std::vector<Field> inner_phi;
  std::vector<Field> outer_phi;
  std::vector<Contour> inner;
  std::vector<Contour> outer;

  /// Largest distance of an outer-region node outside the inner region to
  /// the inner contour, over all times; 0 when contained.
  double containment_excursion() const;
};

EnvelopePair inner_outer_envelopes(const SignedDistanceField& sdf, double delta, const std::vector<double>& t_list,
                                   double beta = 1e-6);

struct SandwichRow {
  double epsilon = 0.0;
  double t = 0.0;
  double inner_excursion = 0.0;  ///< nodal points outside the inner region: max distance to it
  double outer_excursion = 0.0;  ///< nodal points inside the outer region: max distance to its boundary
  double tolerance = 0.0;        ///< 2h

  bool passed() const { return inner_excursion <= tolerance && outer_excursion <= tolerance; }
};

struct SandwichReport {
  std::vector<SandwichRow> rows;

  bool passed() const;
};

/// Each nodal contour of the study against the envelopes at the study's t0.
SandwichReport sandwich_check(const DiagonalStudy& study, const EnvelopePair& env);

void print_fattening_series(std::ostream& out, const FatteningSeries& s);
void print_sandwich_report(std::ostream& out, const SandwichReport& rep);

}  // namespace fattenlab
