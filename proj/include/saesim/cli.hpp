#pragma once

// Command-line front end. The executable is a thin wrapper around `run`, so
// tests can drive every command in-process.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace saesim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitDegenerate = 3;

/// Runs one command line; `args[0]` is the program name. Reports go to the
/// files named by the options, summaries to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// Splices `key = value` lines of the file named by `--config` into the
/// argument list as `--key=value`, skipping keys also given as flags.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

/// 64-bit FNV-1a of the canonical configuration text, as 16 hex digits.
std::string config_hash(std::string_view canonical);

}  // namespace saesim::cli
