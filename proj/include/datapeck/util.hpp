#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace datapeck {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

// Lowercased runs of [A-Za-z0-9]; everything else separates tokens.
std::vector<std::string> tokenize(std::string_view s);

// Round half away from zero at the given number of decimals.
double round_half_away(double x, int decimals);

// Fixed-point formatting of round_half_away(x, decimals); never emits "-0.00".
std::string format_fixed(double x, int decimals);

// Shortest decimal text that parses back to exactly the same double.
std::string format_roundtrip(double x);
std::optional<double> parse_double(std::string_view s);

std::string base64_encode(const std::uint8_t* data, std::size_t n);
std::vector<std::uint8_t> base64_decode(std::string_view s);  // throws parse_error

// RFC 4180 with a configurable delimiter (',' for data tables, '|' for suite
// matrices). Fields containing the delimiter, quotes, or newlines are quoted;
// quotes are doubled. parse_delimited reports 1-based line numbers in errors.
std::string escape_delimited(std::string_view field, char delim);
std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char delim,
                                                      const std::string& origin);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace datapeck
