#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace aqf::cli {

inline constexpr std::string_view tool_version = "1.0.0";

enum ExitCode : int
{
    exit_ok = 0,
    exit_usage = 1,
    exit_data = 2,
};

/// Runs one subcommand. Returns 0 on success, 1 on usage errors (unknown
/// flags, missing input files, bad option values) and 2 on data errors.
int run(int argc, char** argv);

/// Same, with the arguments after the program name.
int run(const std::vector<std::string>& args);

}
