#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace splitsde::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 configuration error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

} // namespace splitsde::cli
