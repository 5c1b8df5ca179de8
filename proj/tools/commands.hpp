#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace qtp::cli {

struct RunOptions {
  std::optional<std::string> config;
  std::filesystem::path out_dir = ".";
  int threads = 1;
  bool strict = false;
};

/// Runs one subcommand and writes <name>.csv and <name>.meta.json.
/// Returns the process exit code; library and config errors propagate.
int run_command(const std::string& command, const RunOptions& opt);

}  // namespace qtp::cli
