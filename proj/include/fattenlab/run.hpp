#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "fattenlab/config.hpp"
#include "fattenlab/lsf.hpp"
#include "fattenlab/shooting.hpp"

namespace fattenlab {

/// Exit statuses of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 1,
  kExitNumerical = 2,
  kExitViolation = 3,
};

/// Environment variable naming the root for relative output directories.
inline constexpr const char* kOutputRootEnv = "FATTENLAB_OUTPUT_ROOT";

/// `output` from the config (or `fallback_name`), resolved against `root`
/// when relative.
std::filesystem::path resolve_output_dir(const RunConfig& cfg, const std::string& fallback_name,
                                         const std::filesystem::path& root);

struct RunResult {
  int exit_code = kExitOk;
  std::vector<std::string> violations;  ///< report checks above tolerance
};

/// Computes everything first and writes artifacts into `out_dir` afterwards,
/// so a run rejected during computation leaves nothing behind. Throws
/// ValidationError / NumericalError. Violations only change the exit code
/// when `strict` is set.
RunResult run(const RunConfig& cfg, const std::filesystem::path& out_dir, bool strict, std::ostream& log);

/// Everything the `study` command computes.
struct StudyRun {
  std::shared_ptr<const Foliation> foliation;
  DiagonalStudy study;
  SymmetryReport symmetry;
  double delta = 0.0;
  EnvelopePair envelopes;
  SandwichReport sandwich;
};

StudyRun compute_study(const RunConfig& cfg);

/// Writes the study directory: summary, symmetry and sandwich reports, one
/// sub-directory per eps and the envelopes.
RunResult write_study(const RunConfig& cfg, const StudyRun& run, const std::filesystem::path& out_dir,
                      std::ostream& log);

/// Full front end: reads and parses the config, runs, maps exceptions to exit
/// codes and prints messages to `err`.
int run_from_file(const std::string& command, const std::filesystem::path& config_path, bool strict, int threads,
                  std::ostream& out, std::ostream& err);

}  // namespace fattenlab
