#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace plexus::csv {

std::vector<std::string> split_line(std::string_view line, char sep = ',');
std::string_view trim(std::string_view s);

/// Strict numeric parse; throws LoadError mentioning `context` on failure.
double parse_double(std::string_view field, const std::string& context);
std::int64_t parse_int(std::string_view field, const std::string& context);

/// Shortest round-trip formatting, stable across runs.
std::string format_double(double v);

}  // namespace plexus::csv
