#pragma once

#include <string>
#include <string_view>

namespace navar {

std::string trim(std::string_view text);
/// Whole-string parse; rejects trailing junk and non-finite values.
bool parse_double(std::string_view text, double& value);
/// 17 significant digits, enough to round-trip any double.
std::string format_double(double value);

}  // namespace navar
