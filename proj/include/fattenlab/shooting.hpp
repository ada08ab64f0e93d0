#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "fattenlab/ac_solver.hpp"
#include "fattenlab/geometry.hpp"

namespace fattenlab {

/// Target point X0 = (x0, t0).
struct SpaceTimePoint {
  Point x = Point::Zero();
  double t = 0.01;
};

/// Leaves {d = s}, |s| <= eta, of a tubular neighbourhood of the shape.
struct FoliationSpec {
  ShapeSpec shape;
  Grid grid;
  double eta = 0.1;
  std::optional<double> clamp;  ///< distance clamp; default_clamp when unset
  LeafSampling sampling = LeafSampling::CellAverage;
};

/// Turning of the end-leaf contour {d = s}: the smoothness heuristic for M_{+-eta}.
struct LeafCheck {
  double s = 0.0;
  double length = 0.0;
  double total_turning = 0.0;  ///< sum of |turning angles| over all lines
  double max_turning = 0.0;    ///< largest single-vertex turning angle
  std::size_t lines = 0;

  bool ok() const;  ///< non-empty and total turning of every line <= 6 pi
};

/// The family u^eps_s with a cache of solutions at t0 keyed by (s, eps, t0).
class Foliation {
 public:
  explicit Foliation(FoliationSpec spec);

  const FoliationSpec& spec() const { return spec_; }
  const SignedDistanceField& distance() const { return sdf_; }
  const Grid& grid() const { return sdf_.grid(); }
  const std::vector<LeafCheck>& leaf_checks() const { return leaf_checks_; }

  Field leaf(double s) const;
  ACParams params(double eps, double t_end, std::vector<double> snapshots) const;

  /// u^eps_s at the snapshot nearest t0. Cached; safe to call concurrently.
  Field solution_at(double s, double eps, double t0) const;
  std::size_t cache_size() const;

 private:
  FoliationSpec spec_;
  SignedDistanceField sdf_;
  std::vector<LeafCheck> leaf_checks_;
  mutable std::mutex mutex_;
  mutable std::map<std::tuple<double, double, double>, Field> cache_;
};

/// u^eps_s(X0) by multilinear interpolation.
double family_value_at(const Foliation& fol, double s, double eps, const SpaceTimePoint& x0);

struct MonotoneRow {
  double s1 = 0.0;
  double s2 = 0.0;
  double t = 0.0;
  double max_violation = 0.0;  ///< max of u_{s2} - u_{s1}, clipped at 0
  Index violations = 0;        ///< nodes above the tolerance
};

struct MonotoneReport {
  double tolerance = 1e-12;
  std::vector<MonotoneRow> rows;

  bool passed() const;
};

/// Pointwise order u_{s2} <= u_{s1} for consecutive s1 <= s2 at each t.
MonotoneReport check_monotone_in_s(const Foliation& fol, double eps, const std::vector<double>& s_list,
                                   const std::vector<double>& t_list);

struct ShootingOptions {
  double kappa = 0.25;
  double tol = 1e-3;
  int max_iterations = 60;
};

struct BracketStep {
  double s = 0.0;
  double value = 0.0;
};

struct ShootingResult {
  double epsilon = 0.0;
  SpaceTimePoint target;
  double s_star = 0.0;
  double value = 0.0;
  double residual = 0.0;
  double tol = 0.0;
  std::vector<BracketStep> history;  ///< evaluation order: both ends, midpoints, flatness probes
  int iterations = 0;                ///< midpoints evaluated
  std::pair<double, double> bracket{0.0, 0.0};
  std::optional<std::pair<double, double>> flat_interval;
  bool converged = false;

  /// History sorted by s has non-increasing values (within `slack`).
  bool history_monotone(double slack = 1e-12) const;
};

/// Bisection on s -> u^eps_s(X0) between -eta and +eta. Requires
/// u(-eta) >= 1 - kappa and u(+eta) <= kappa - 1, else throws ValidationError.
/// Stops when |value| <= tol. After convergence the points s* +- h/4 are probed;
/// if both are within tol too, the flat interval is widened by doubling and s*
/// becomes its midpoint.
ShootingResult bisect_leaf(const Foliation& fol, double eps, const SpaceTimePoint& x0,
                           const ShootingOptions& opt = {});

struct StudyEntry {
  ShootingResult shot;
  Field solution;            ///< u^eps_{s*} at t0
  Contour nodal;             ///< {u = 0} at t0
  double nodal_distance = 0.0;  ///< distance from x0 to the nodal contour
  double local_mass = 0.0;      ///< integral of e over B(x0, rho_loc)
  double hausdorff_to_previous = -1.0;  ///< -1 for the first entry
};

struct DiagonalStudy {
  std::vector<double> eps_list;
  SpaceTimePoint target;
  double tol = 0.0;
  double rho_loc = 0.0;  ///< 10 eps_min
  std::vector<StudyEntry> entries;
  std::string failure;   ///< empty when every eps converged

  bool complete() const { return failure.empty() && entries.size() == eps_list.size(); }
  /// Every nodal contour within 2h of x0.
  bool nodal_ok() const;
  /// local_mass >= sigma rho_loc for every entry.
  bool mass_ok() const;
  /// Consecutive Hausdorff distances non-increasing (soft).
  bool hausdorff_nonincreasing() const;
};

/// Shoots each eps (strictly decreasing list), extracts the nodal contour and
/// the local energy mass. Independent eps run on separate threads when more
/// than one thread is configured. A failed eps stops the study; earlier entries
/// are kept and `failure` says why.
DiagonalStudy diagonal_study(const Foliation& fol, const SpaceTimePoint& x0, const std::vector<double>& eps_list,
                             const ShootingOptions& opt = {});

enum class SymmetryGroup { D2, D4, ReflectX, ReflectY };

SymmetryGroup parse_symmetry_group(const std::string& name);
std::string to_string(SymmetryGroup g);

/// max over group elements of max-node |u - u o g|. The grid must be a box
/// centred at the origin; throws ValidationError otherwise.
double symmetry_deviation(const Field& u, SymmetryGroup group);

/// One energy wall met by a transversal segment.
struct WallProbe {
  double start = 0.0;          ///< arclength along the segment
  double end = 0.0;
  double mass = 0.0;           ///< integral of e across the wall / sigma
  int sign_changes = 0;        ///< zeros of u inside the wall
  bool phase_flips = false;    ///< u has opposite signs on the two sides
  int multiplicity = 0;        ///< nearest integer >= 1 to mass with the parity of phase_flips
};

struct Transversal {
  Point2 a = Point2::Zero();
  Point2 b = Point2::Zero();
};

struct MultiplicityProbe {
  double epsilon = 0.0;
  Transversal segment;
  int sign_changes = 0;
  std::vector<WallProbe> walls;
};

/// Walls are maximal runs with e >= 0.05/eps along the segment (sampled at
/// h/4), merged across gaps shorter than 2 eps. Odd multiplicity when the
/// phase flips across a wall, even when it does not.
MultiplicityProbe probe_multiplicity(const Field& u, double eps, const Transversal& segment);

struct SymmetryReport {
  SymmetryGroup group = SymmetryGroup::D2;
  double tolerance = 1e-9;
  std::vector<double> eps;
  std::vector<double> deviation;
  std::vector<MultiplicityProbe> probes;

  bool passed() const;
};

SymmetryReport symmetry_and_multiplicity(const DiagonalStudy& study, SymmetryGroup group,
                                         const std::vector<Transversal>& transversals = {});

void write_shooting_result(const std::filesystem::path& path, const ShootingResult& r);
void print_monotone_report(std::ostream& out, const MonotoneReport& rep);
void print_study_summary(std::ostream& out, const DiagonalStudy& study);
void print_symmetry_report(std::ostream& out, const SymmetryReport& rep);

}  // namespace fattenlab
