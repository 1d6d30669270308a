#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mxsr::cli {

// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

// Reads a flat "key = value" file ('#' starts a comment) into pairs, in
// file order. IoError if unreadable, ConfigurationError on malformed lines.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path);

}  // namespace mxsr::cli
