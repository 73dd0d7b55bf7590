#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace atk::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kIo = 3, kIntegrity = 4 };

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, Streams streams);

}  // namespace atk::cli
