#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tokon::cli {

/// Exit codes: 0 success, 1 usage error, 2 runtime failure.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tokon::cli
