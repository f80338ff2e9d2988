#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gtex::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point shared by the `gtex` executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gtex::cli
