#pragma once

// Command-line front end. Every subcommand writes its resolved run
// configuration next to its main output as "<output>.run.json" (or
// "run_config.json" inside an output directory); passing that file back with
// --config reproduces the run.

#include <iosfwd>
#include <string>
#include <vector>

#include "netsynth/common.hpp"
#include "netsynth/errors.hpp"

namespace netsynth {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

int exit_code(ErrorCategory category);

struct RunConfig {
    std::string command;
    json params;    // one entry per command-line option, by long name
    json resolved;  // derived settings for the record (not read back)
};

void to_json(json& j, const RunConfig& c);
void from_json(const json& j, RunConfig& c);

/// Runs one subcommand; args exclude the program name. Returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace netsynth
