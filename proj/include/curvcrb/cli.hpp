#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace curvcrb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitVerification = 4;

/// Runs one invocation; `args` excludes the program name. Reports go to `out`
/// unless --out names a file, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace curvcrb::cli
