#ifndef TIPPING_RUN_HPP
#define TIPPING_RUN_HPP

// Subcommand orchestration behind the command-line tool.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tipping/config.hpp"

namespace tipping::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int { ok = 0, failure = 1, indeterminate = 2 };

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"simulate",   "attractors", "classify",        "critical-rate",
                                                 "lyapunov",   "ftle",       "ews-region",      "bifurcation-map",
                                                 "safe-points", "reaction-region"};
  return names;
}

/// Resolves `doc` (with overrides and an optional output directory), runs
/// the subcommand, writes its files plus manifest.json and returns the exit
/// code. Errors are reported on `log`.
int run(std::string_view subcommand, const config::json& doc, const std::vector<std::string>& overrides,
        const std::optional<std::string>& out_dir, std::ostream& log);

/// Reads a JSON document from disk.
config::json load_document(const std::string& path);

}  // namespace tipping::cli

#endif  // TIPPING_RUN_HPP
