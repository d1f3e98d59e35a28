#pragma once

#include <string>
#include <vector>

namespace dgen {

/// Number formatting for all text interfaces: 17 significant digits, enough
/// for a bit-exact double round trip.
std::string format_double(double v);

double parse_double(const std::string& s);
long long parse_int(const std::string& s);

std::vector<std::string> split_csv_line(const std::string& line);
std::vector<std::string> split_lines(const std::string& text);

/// Write-temp-then-rename so partially written files are never observed.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);
bool file_exists(const std::string& path);

}  // namespace dgen
