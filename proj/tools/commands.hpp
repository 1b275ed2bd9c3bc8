#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace xgad::cli {

// Exit statuses shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;  // validation, integrity or threshold failure
inline constexpr int kExitIo = 2;      // I/O, parse or argument failure

inline constexpr const char* kToolVersion = "0.1.0";

// Parses `args` (without the program name) and runs the selected command.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xgad::cli
