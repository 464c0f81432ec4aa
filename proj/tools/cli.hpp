#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace paratransit::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,          ///< I/O, parse or usage errors
  kExitLimit = 2,          ///< stopped at a time/node limit with an incumbent
  kExitInfeasible = 3,
  kExitNoIncumbent = 4,
  kExitCheckFailed = 5,    ///< gradcheck above tolerance
};

/// Entry point shared by the executable and the tests. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace paratransit::cli
