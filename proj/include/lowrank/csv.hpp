#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lowrank::csv {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

/// Quotes a field when it holds a comma, quote or line break.
std::string escape(std::string_view field);
std::string join_row(const std::vector<std::string>& fields);

/// Splits one CSV record (no embedded newlines) into fields.
std::vector<std::string> split_row(std::string_view line);

/// Complete lines of `text`; a trailing fragment without '\n' is dropped.
std::vector<std::string_view> complete_lines(std::string_view text);

}  // namespace lowrank::csv
