#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace panelforge::cli {

// Exit codes.
inline constexpr int kPass = 0;
inline constexpr int kFail = 1;
inline constexpr int kUsage = 2;

// Runs one `panelforge <command> ...` invocation; args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace panelforge::cli
