#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pipesim {

// Exit codes: 0 success, 1 usage, 2 parse error, 3 validation failure,
// 4 plan infeasible, 5 simulation failure (deadlock/mismatch).
enum ExitCode {
    kExitOk = 0,
    kExitUsage = 1,
    kExitParse = 2,
    kExitValidation = 3,
    kExitPlanInfeasible = 4,
    kExitSimFailure = 5,
};

// The whole CLI behind main(); args excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pipesim
