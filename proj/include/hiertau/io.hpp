#pragma once

#include <string>

namespace hiertau {

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

// Write to a temporary file in the same directory, then rename onto
// `path`. Partial output never appears under the final name.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace hiertau
