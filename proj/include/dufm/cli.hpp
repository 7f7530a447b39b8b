#pragma once

#include <string>
#include <vector>

namespace dufm::cli {

/// Dispatch a full command line (without the program name). Returns the
/// process exit code: 0 success, 1 numeric failure, 2 invalid arguments.
int execute(const std::vector<std::string>& args);

/// Inclusive integer ranges "a..b" and comma lists "a,b,c".
std::vector<int> parse_int_list(const std::string& text);
std::vector<unsigned long long> parse_ull_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

}  // namespace dufm::cli
