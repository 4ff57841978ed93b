#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace netgnn {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;   // anything not classified below
inline constexpr int kExitConfig = 2;    // bad flags, config file, missing input file
inline constexpr int kExitData = 3;      // schema mismatch, corrupt input
inline constexpr int kExitNumeric = 4;   // non-finite values during training or inference
inline constexpr int kExitVersion = 5;   // checkpoint format version mismatch

// Runs the `netgnn` command line. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "8:16" (step 1), "8:16:2", "8,10,12" or "16".
std::vector<double> parse_number_list(const std::string& text);
// "0-3,3-4" -> {(0,3), (3,4)}
std::vector<std::pair<int, int>> parse_pair_list(const std::string& text);

}  // namespace netgnn
