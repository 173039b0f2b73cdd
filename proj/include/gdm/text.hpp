#pragma once

// Small string helpers shared by the file readers and writers.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gdm::text {

std::string_view trim(std::string_view s);

/// Splits on a single delimiter character; empty fields are kept.
std::vector<std::string_view> split(std::string_view s, char delimiter);

/// Splits on runs of blanks/tabs; empty fields are dropped.
std::vector<std::string_view> split_whitespace(std::string_view s);

/// Full-field parse; leading "+" and a missing leading zero (".28") accepted, "nan"/"inf" rejected.
std::optional<double> parse_double(std::string_view s);

std::optional<long long> parse_int(std::string_view s);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

/// Fixed-point text with the given number of decimals.
std::string format_fixed(double value, int decimals);

std::string to_lower(std::string_view s);

bool parse_bool(std::string_view s, bool& out);

}  // namespace gdm::text
