#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace consist::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default directory for written files.
inline constexpr const char* kOutputDirEnv = "CONSIST_OUTPUT_DIR";

/// Runs one command. args excludes the program name. JSON and data go to out,
/// diagnostics to err.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace consist::cli
