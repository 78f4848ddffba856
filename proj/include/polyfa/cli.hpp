#pragma once

#include <iosfwd>
#include <string_view>

namespace polyfa {

inline constexpr std::string_view kVersion = "0.1.0";

/// Entry point of the `polyfa` command: fit, compare, explore, simulate.
/// Returns 0 on success, 1 on invalid input, 2 when a fit finished but some
/// parameter has PSRF above 1.1.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace polyfa
