#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace semtrans {

/// Runs one CLI invocation. Exit codes: 0 = success (or: checked and
/// exact), 1 = checked and not exact, 2 = invalid input or runtime error.
int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err);

}  // namespace semtrans
