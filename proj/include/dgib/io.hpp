#pragma once

#include <string>
#include <vector>

namespace dgib {

// Whole-file read; throws Error(io) when the file cannot be opened.
std::string read_file(const std::string& path);

// Atomic write: temp file in the target directory, then rename.
void write_file_atomic(const std::string& path, const std::string& content);

std::vector<std::string> split(const std::string& line, char sep);

// Shortest exact round-trip formatting for doubles; used everywhere a double
// reaches an output file so that reruns are byte-identical.
std::string format_double(double v);

bool file_exists(const std::string& path);

}  // namespace dgib
