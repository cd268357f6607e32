#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dpmliv::text {

/// Shortest representation that parses back to the identical double.
std::string format_double(double value);

/// Strict parse of a full field; nullopt on any trailing garbage or empty input.
std::optional<double> parse_double(std::string_view field);

/// Splits one CSV line on commas. Surrounding double quotes are removed and
/// doubled quotes inside a quoted field are unescaped.
std::vector<std::string> split_csv_line(std::string_view line);

std::string_view trim(std::string_view s);

/// 64-bit FNV-1a, used for config hashes and seed derivation.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace dpmliv::text
