#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dacae::csv {

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);

/// Splits a line on commas; strips a trailing '\r'. No quoting support.
std::vector<std::string> split_line(std::string_view line);

/// Throw IoError mentioning `what` on malformed input.
double parse_double(std::string_view text, std::string_view what);
std::size_t parse_index(std::string_view text, std::string_view what);

std::string join(const std::vector<std::string>& fields);

} // namespace dacae::csv
