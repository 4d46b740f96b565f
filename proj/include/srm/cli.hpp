#pragma once

// Command-line front end. The subcommands are gen-basis, train, srm,
// expected and repro-fig1; see README.md for the flag reference.

#include <iosfwd>
#include <string>
#include <vector>

namespace srm::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kIo = 3, kNumeric = 4 };

// Parses "0..9", "3", "1,7" or "0..4,8" into a sorted, de-duplicated list.
std::vector<int> parse_labels(const std::string& spec);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace srm::cli
