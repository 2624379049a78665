#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ttvr::session {

/// Exit codes of run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitMissingArtifact = 4;

/// `ttvr <subcommand> [options]`. Errors are printed to `err` as one JSON
/// object {"error": {"kind", "message", "path"?}}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace ttvr::session
