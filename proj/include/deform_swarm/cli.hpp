#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace deform_swarm {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitCertificateFailure = 1,
    kExitUsage = 2,
};

/// Entry point of the `deform-swarm` tool; `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deform_swarm
