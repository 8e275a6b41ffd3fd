#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace keywatch::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kProtocol = 3,
  kAffected = 4,
};

/// Entry point behind the `keywatch` binary. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace keywatch::cli
