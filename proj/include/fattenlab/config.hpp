#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fattenlab/ac_solver.hpp"
#include "fattenlab/geometry.hpp"
#include "fattenlab/grid.hpp"
#include "fattenlab/shooting.hpp"

namespace fattenlab {

enum class Command { Simulate, Shoot, Study, Verify, Energy, Lsf };

Command parse_command(const std::string& name);
std::string to_string(Command c);

struct GridConfig {
  int dim = 2;
  int points = 256;
  double lo = -1.0;
  double hi = 1.0;
  Boundary boundary = Boundary::far_field(-1.0);

  Grid grid() const { return Grid::box(dim, lo, hi, points, boundary); }
};

struct ACConfig {
  std::optional<double> epsilon;
  Scheme scheme = Scheme::ExplicitEuler;
  double dt = 0.0;
  double t_end = 0.0;
  std::vector<double> snapshots;
  int log_snapshots = 0;  ///< extra snapshots log-spaced over [4 dt, eps^2]
};

struct ShootingConfig {
  SpaceTimePoint x0;
  double eta = 0.1;
  std::optional<double> clamp;
  ShootingOptions options;
  std::vector<double> eps_list;
  SymmetryGroup symmetry = SymmetryGroup::D2;
  std::vector<Transversal> transversals;
  std::optional<double> delta;  ///< envelope offset; eta / 2 when unset
};

struct LSFConfig {
  double beta = 1e-6;
  double t_end = 0.0;
  std::vector<double> snapshots;
  double band_cells = 1.0;  ///< fattening band in units of h
  double delta = 0.0;       ///< > 0 adds an inner/outer envelope pair
};

struct VerifyConfig {
  std::vector<double> dtilde_times{0.001, 0.0025, 0.005};
  std::vector<double> shifts{0.0};
};

struct DensityConfig {
  std::vector<Point> points;
  double t0 = 0.0;  ///< 0 uses the last snapshot time
  std::vector<double> radii;
};

/// Parsed run configuration. Sections: top level (command, output), [shape],
/// [grid], [ac], [shooting], [lsf], [verify], [density].
struct RunConfig {
  Command command = Command::Simulate;
  std::string output;  ///< empty: the config file stem
  ShapeSpec shape;
  GridConfig grid;
  ACConfig ac;
  ShootingConfig shooting;
  LSFConfig lsf;
  VerifyConfig verify;
  DensityConfig density;
  std::string text;  ///< verbatim source, hashed into manifests
};

/// Parses and validates. `command` overrides (and must agree with) a
/// `command =` line. Throws ValidationError citing the line for syntax errors,
/// unknown keys and duplicates.
RunConfig parse_config(const std::string& text, std::optional<Command> command = std::nullopt);

/// Checks the blocks the command needs and the module preconditions that can
/// be decided before any computation.
void validate_config(const RunConfig& cfg);

/// ACParams for one eps with the configured time grid.
ACParams ac_params(const RunConfig& cfg, double eps);

/// 64-bit FNV-1a of the config text, 16 hex digits.
std::string config_hash(const std::string& text);

}  // namespace fattenlab
