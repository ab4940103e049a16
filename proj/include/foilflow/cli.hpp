#pragma once

#include <string>
#include <vector>

namespace foilflow::cli {

// Runs the command-line interface in-process. Exit codes: 0 success,
// 2 configuration error, 3 I/O error, 4 numeric failure (all samples
// failed).
int run(const std::vector<std::string>& args);

int run(int argc, char** argv);

}  // namespace foilflow::cli
