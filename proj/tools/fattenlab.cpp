#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fattenlab/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Allen-Cahn shooting and fattening diagnostics"};
  app.require_subcommand(1, 1);
  std::string config;
  bool strict = false;
  int threads = 1;
  for (const char* name : {"simulate", "shoot", "study", "verify", "energy", "lsf"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "run configuration (key = value, [section] headers)")->required();
    sub->add_flag("--strict", strict, "exit 3 when a verification report has violations");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }
  app.footer(std::string("Relative output directories resolve against $") + fattenlab::kOutputRootEnv +
             " (default: the working directory).");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fattenlab::kExitInvalid;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return fattenlab::run_from_file(command, config, strict, threads, std::cout, std::cerr);
}
