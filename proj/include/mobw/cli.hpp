#pragma once

// Command-line front end: analyze | simulate | bf-test | plot-data.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mobw::cli {

// 64-bit FNV-1a, used to stamp output files with the run configuration.
std::uint64_t fnv1a(std::string_view text);

// Lines of a flat `key=value` config file turned into `--key=value`
// arguments. Blank lines and lines starting with '#' are skipped.
std::vector<std::string> config_arguments(const std::string& path);

// Returns the process exit status. Errors are reported on `err` as one line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mobw::cli
