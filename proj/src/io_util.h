#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace emsserve::detail {

// Both throw Error(IoError) with the path in the message.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
// Strict: the whole of `s` must be a number. Returns false otherwise.
bool parse_double(std::string_view s, double& out);

std::string_view trim(std::string_view s);

}  // namespace emsserve::detail
