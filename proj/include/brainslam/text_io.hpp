#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace brainslam {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

std::vector<std::string_view> split_whitespace(std::string_view line);
std::vector<std::string_view> split_csv(std::string_view line);

// Both throw ParseError naming `line_no`.
double parse_double(std::string_view field, std::size_t line_no);
std::int64_t parse_int64(std::string_view field, std::size_t line_no);

std::string_view trim(std::string_view s);

}  // namespace brainslam
