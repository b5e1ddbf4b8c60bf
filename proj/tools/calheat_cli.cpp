#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "calheat/calheat.h"

namespace {

int exit_code(calheat_status s) {
  switch (s) {
    case CALHEAT_OK:
      return 0;
    case CALHEAT_ASSERTION_FAILED:
      return 1;
    case CALHEAT_CONFIG_ERROR:
    case CALHEAT_INVALID_ARGUMENT:
      return 2;
    default:
      return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary integral solver for the heat equation in perforated planar domains"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path, out_dir = "out";
  int threads = 1;
  std::uint64_t seed = 12345;
  app.add_option("--config", config_path, "key = value configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory for CSVs and report.txt");
  app.add_option("--threads", threads, "worker threads for assembly")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for randomized checks");

  const char* descriptions[][2] = {
      {"solve-linear", "linear Robin problem (manufactured or Neumann data)"},
      {"solve-nonlinear", "nonlinear Robin problem by per-panel Newton"},
      {"ntd", "assemble and export the Neumann-to-Dirichlet blocks"},
      {"shape-sweep", "solutions along a shape path and shape-derivative diagnostics"},
      {"verify", "full property suite"},
      {"convergence", "manufactured refinement study"},
  };
  for (const auto& d : descriptions) app.add_subcommand(d[0], d[1]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  calheat_set_threads(threads);
  calheat_config* cfg = nullptr;
  calheat_status st = calheat_config_load(config_path.c_str(), &cfg);
  if (st != CALHEAT_OK) {
    std::fprintf(stderr, "error: %s\n", calheat_last_error());
    return exit_code(st);
  }
  int failed = 0;
  st = calheat_run(cfg, command.c_str(), out_dir.c_str(), seed, &failed);
  calheat_config_free(cfg);
  if (st == CALHEAT_OK) {
    std::printf("%s: all assertions passed (report in %s/report.txt)\n", command.c_str(), out_dir.c_str());
  } else if (st == CALHEAT_ASSERTION_FAILED) {
    std::printf("%s: %d assertion(s) failed (report in %s/report.txt)\n", command.c_str(), failed, out_dir.c_str());
  } else {
    std::fprintf(stderr, "error: %s\n", calheat_last_error());
  }
  return exit_code(st);
}
