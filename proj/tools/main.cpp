#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "qtp/errors.hpp"
#include "qtp/numeric.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Detector-based quantum time-of-arrival and correlation computations"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  int threads = 1;
  bool strict = false;
  app.add_option("--config", config, "experiment configuration (TOML)");
  app.add_option("--out", out, "output directory (default: $QTP_OUT_DIR or .)");
  app.add_option("--threads", threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  app.add_flag("--strict", strict, "treat warnings as errors");
  for (const char* name : {"toa", "udw", "glauber", "joint", "entropy", "verify"}) {
    app.add_subcommand(name)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  qtp::cli::RunOptions opt;
  if (!config.empty()) opt.config = config;
  if (!out.empty()) {
    opt.out_dir = out;
  } else if (const char* env = std::getenv("QTP_OUT_DIR")) {
    opt.out_dir = env;
  }
  opt.threads = qtp::numeric::resolve_threads(threads);
  opt.strict = strict;
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    return qtp::cli::run_command(command, opt);
  } catch (const qtp::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const qtp::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
