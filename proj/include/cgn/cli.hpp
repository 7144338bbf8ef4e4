#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cgn::cli {

/// Runs the `cgn` command line. Returns the process exit code: 0 success,
/// 1 validation error (bad flags, inputs or files), 2 runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main_entry(int argc, char** argv, const std::vector<std::string>& prefix = {});

}  // namespace cgn::cli
