#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "wdn/history.hpp"
#include "wdn/model.hpp"

namespace wdn {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitIo = 2, kExitNumeric = 3 };

/// Files written by `gen` and read by the other subcommands.
struct World {
  std::shared_ptr<const NetworkTopology> topology;
  RuleBasedOperator op;
  HistoryArchive history;
};

World load_world(const std::filesystem::path& dir);

/// Runs the `wdnopt` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wdn
