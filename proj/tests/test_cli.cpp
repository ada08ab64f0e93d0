#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fattenlab/config.hpp"
#include "fattenlab/run.hpp"

using namespace fattenlab;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(command = simulate
[shape]
type = circle
radius = 0.4
[grid]
points = 64
[ac]
epsilon = 0.125
t_end = 0.01
)";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fattenlab_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs the CLI binary with the output root set to `root`; returns the exit status.
int cli(const fs::path& root, const std::string& args) {
  const char* bin = std::getenv("FATTENLAB_CLI");
  REQUIRE(bin != nullptr);
  const std::string cmd = std::string(kOutputRootEnv) + "='" + root.string() + "' '" + bin + "' " + args + " > '" +
                          (root / "stdout.txt").string() + "' 2> '" + (root / "stderr.txt").string() + "'";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const RunConfig cfg = parse_config(kMinimal);
  CHECK(cfg.command == Command::Simulate);
  CHECK(std::holds_alternative<Circle>(cfg.shape));
  CHECK(cfg.grid.dim == 2);
  CHECK(cfg.grid.lo == -1.0);
  CHECK(cfg.grid.hi == 1.0);
  CHECK(cfg.ac.scheme == Scheme::ExplicitEuler);
  const ACParams p = ac_params(cfg, *cfg.ac.epsilon);
  CHECK(p.snapshot_times.size() == 10);
  CHECK(p.snapshot_times.back() == doctest::Approx(0.01));
  // the command line overrides nothing when it agrees
  CHECK(parse_config(kMinimal, Command::Simulate).command == Command::Simulate);
}

TEST_CASE("config errors") {
  const std::string base = kMinimal;
  CHECK(error_of(std::string(base).replace(base.find("0.125"), 5, "1.5")).find("epsilon must be in (0,1)") !=
        std::string::npos);
  CHECK(error_of(base + "colour = red\n") == "line 10: unknown key 'colour' in [ac]");
  CHECK(error_of(base + "[grid]\npoints = 32\n") == "line 10: duplicate section [grid]");
  CHECK(error_of(base + "t_end = 0.02\n") == "line 10: duplicate key 't_end' in [ac]");
  CHECK(error_of(base + "[unknown]\n") == "line 10: unknown section [unknown]");
  CHECK(error_of(base + "[shooting]\neps_list = 0.04, 0.08\n") == "line 11: eps_list must be strictly decreasing");
  CHECK(error_of(base + "[shooting]\neps_list = 0.04, 0.04\n") == "line 11: eps_list must be strictly decreasing");
  CHECK(error_of("command = simulate\n[shape]\ntype = circle\niterations = 3\n[ac]\nepsilon = 0.1\nt_end = 1\n") ==
        "line 4: key 'iterations' does not apply to shape type 'circle'");
  CHECK(error_of("command = simulate\n[ac]\nepsilon = 0.1\n") == "missing required key 'type' in [shape]");
  CHECK(error_of("[shape]\ntype = circle\n") == "missing required key 'command'");
  CHECK(error_of(std::string(base).replace(base.find("t_end = 0.01"), 12, "t_end = x")) ==
        "line 9: t_end must be a number, got 'x'");
  // eps below 4h
  CHECK(!error_of(std::string(base).replace(base.find("0.125"), 5, "0.05")).empty());
  CHECK_THROWS_AS(parse_config(kMinimal, Command::Study), ValidationError);
}

TEST_CASE("config blocks for each command") {
  const RunConfig study = parse_config(R"(command = study
[shape]
type = figure_eight
radius = 0.3
[grid]
points = 128
[shooting]
x0 = 0, 0
t0 = 0.01
eps_list = 0.08, 0.07
symmetry = D2
transversals = 0, -0.2, 0, 0.2; -0.2, 0, 0.2, 0
)");
  CHECK(study.shooting.eps_list.size() == 2);
  CHECK(study.shooting.transversals.size() == 2);
  CHECK(study.shooting.transversals[1].b.x() == 0.2);
  CHECK(!study.shooting.delta);

  CHECK_THROWS_AS(parse_config("command = lsf\n[shape]\ntype = circle\n[lsf]\nt_end = 0.01\nbeta = 1\n"),
                  ValidationError);
  const RunConfig koch = parse_config(
      "command = energy\n[shape]\ntype = koch\niterations = 2\nside = 0.5\n[grid]\npoints = 64\n"
      "[ac]\nepsilon = 0.125\nt_end = 0.02\nlog_snapshots = 6\n");
  const ACParams p = ac_params(koch, 0.125);
  CHECK(p.snapshot_times.size() == 6);
  CHECK(p.snapshot_times.back() == doctest::Approx(0.125 * 0.125));
  CHECK(p.t_end == doctest::Approx(0.02));
}

TEST_CASE("config hash") {
  CHECK(config_hash("") == "cbf29ce484222325");
  CHECK(config_hash("a") == "af63dc4c8601ec8c");
  CHECK(config_hash(kMinimal) != config_hash(std::string(kMinimal) + "\n"));
}

TEST_CASE("invalid config leaves no artifacts") {
  const fs::path root = scratch("invalid");
  std::string text = kMinimal;
  text.replace(text.find("0.125"), 5, "1.5");
  write(root / "bad.cfg", "output = should_not_exist\n" + text);
  CHECK(cli(root, "simulate --config '" + (root / "bad.cfg").string() + "'") == kExitInvalid);
  CHECK(!fs::exists(root / "bad"));
  CHECK(!fs::exists(root / "should_not_exist"));
  CHECK(slurp(root / "stderr.txt").find("epsilon must be in (0,1)") != std::string::npos);
  CHECK(cli(root, "simulate --config '" + (root / "missing.cfg").string() + "'") == kExitInvalid);
  CHECK(cli(root, "frobnicate --config x") == kExitInvalid);
  // the config is for simulate
  write(root / "ok.cfg", kMinimal);
  CHECK(cli(root, "lsf --config '" + (root / "ok.cfg").string() + "'") == kExitInvalid);
  CHECK(!fs::exists(root / "ok"));
}

TEST_CASE("simulate writes snapshots and a manifest, independent of threads") {
  const fs::path root = scratch("simulate");
  write(root / "circle.cfg", kMinimal);
  REQUIRE(cli(root, "simulate --config '" + (root / "circle.cfg").string() + "' --threads 1") == kExitOk);
  fs::rename(root / "circle", root / "one");
  REQUIRE(cli(root, "simulate --config '" + (root / "circle.cfg").string() + "' --threads 4") == kExitOk);

  const std::string manifest = slurp(root / "circle" / "manifest.txt");
  CHECK(manifest.find("config_hash = " + config_hash(kMinimal)) != std::string::npos);
  CHECK(manifest.find("module cli = ") != std::string::npos);
  CHECK(manifest.find("file snapshots/u_0009.f64") != std::string::npos);
  CHECK(fs::exists(root / "circle" / "energy.txt"));
  CHECK(fs::exists(root / "circle" / "contours" / "zero_0000.txt"));

  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "one")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), root / "one");
    CHECK_MESSAGE(slurp(e.path()) == slurp(root / "circle" / rel), rel.string());
    ++files;
  }
  CHECK(files == 3 + 10 * 3);
}

TEST_CASE("strict verify turns violations into exit 3") {
  const fs::path root = scratch("verify");
  // d~ checked where sqrt(t) is below a cell: the caloric residual is out of tolerance
  const std::string text = R"(command = verify
output = v
[shape]
type = circle
radius = 0.4
[grid]
points = 64
[ac]
epsilon = 0.125
t_end = 0.02
snapshots = 0.004, 0.008, 0.0156, 0.02
[verify]
dtilde_times = 0.0001
)";
  write(root / "v.cfg", text);
  CHECK(cli(root, "verify --config '" + (root / "v.cfg").string() + "'") == kExitOk);
  CHECK(cli(root, "verify --strict --config '" + (root / "v.cfg").string() + "'") == kExitViolation);
  CHECK(slurp(root / "stderr.txt").find("smoothed distance") != std::string::npos);
  for (const char* f : {"bounds.txt", "dtilde.txt", "residual_signs.txt", "u_barrier.txt", "gradient_barrier.txt"})
    CHECK(fs::exists(root / "v" / f));
}

TEST_CASE("shoot that cannot converge exits 2") {
  const fs::path root = scratch("shoot");
  const std::string text = R"(command = shoot
output = s
[shape]
type = figure_eight
radius = 0.3
[grid]
points = 128
[ac]
epsilon = 0.08
[shooting]
x0 = 0, 0
t0 = 0.01
max_iterations = 1
)";
  write(root / "s.cfg", text);
  CHECK(cli(root, "shoot --config '" + (root / "s.cfg").string() + "'") == kExitNumerical);
  CHECK(slurp(root / "s" / "shooting.txt").find("# converged no") != std::string::npos);

  // a circle never vanishes at its centre at t0: rejected at the bracket ends
  std::string circle = text;
  circle.replace(circle.find("type = figure_eight"), 19, "type = circle");
  circle.replace(circle.find("x0 = 0, 0"), 9, "x0 = 0.6, 0");
  write(root / "c.cfg", circle);
  CHECK(cli(root, "shoot --config '" + (root / "c.cfg").string() + "'") == kExitInvalid);
}

TEST_CASE("lsf writes contours and the fattening series") {
  const fs::path root = scratch("lsf");
  write(root / "f8.cfg", R"(command = lsf
[shape]
type = figure_eight
radius = 0.3
[grid]
points = 96
[lsf]
t_end = 0.004
snapshots = 0, 0.002, 0.004
delta = 0.05
)");
  REQUIRE(cli(root, "lsf --config '" + (root / "f8.cfg").string() + "'") == kExitOk);
  CHECK(slurp(root / "f8" / "fattening.txt").find("# t_detect") != std::string::npos);
  CHECK(fs::exists(root / "f8" / "contours" / "zero_0002.txt"));
  CHECK(fs::exists(root / "f8" / "envelopes" / "manifest.txt"));
  CHECK(fs::exists(root / "f8" / "envelopes" / "outer_0002.txt"));
}
