#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace segcal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInvalid = 2;

/// Runs one command line (without the program name). Diagnostics go to
/// `err`, summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace segcal::cli
