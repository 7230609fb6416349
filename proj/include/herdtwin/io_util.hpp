#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace herdtwin::io {

std::string_view trim(std::string_view text);
std::string to_upper(std::string_view text);
bool iequals(std::string_view a, std::string_view b);

// Splits one CSV line on commas. Fields are not quoted in any format this
// project reads or writes.
std::vector<std::string_view> split_csv(std::string_view line);

// Shortest representation that parses back to the same double.
std::string format_double(double value);
// Fixed notation with the given number of decimals, for human-facing tables.
std::string format_fixed(double value, int decimals);

bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

void write_text_file(const std::filesystem::path& path, std::string_view contents);
std::string read_text_file(const std::filesystem::path& path);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace herdtwin::io
