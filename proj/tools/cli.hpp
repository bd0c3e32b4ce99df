#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eolsr::cli
{
    inline constexpr int kExitOk = 0;
    inline constexpr int kExitUsage = 2;
    inline constexpr int kExitDomain = 3;

    // Default output directory when --out is not given.
    inline constexpr const char* kOutDirEnv = "EOLSR_OUT_DIR";

    // Runs one command line (args[0] is the program name). Diagnostics go to `err`,
    // progress and summaries to `out`. Returns the process exit code.
    int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
} // namespace eolsr::cli
