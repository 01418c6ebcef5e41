#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace advcons {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "ADVCONS_OUT_DIR";

/// Entry point of the advcons tool. `args` excludes the program name.
/// Reports and check tables go to `out`, progress and errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace advcons
