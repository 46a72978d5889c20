#pragma once

#include <string>
#include <string_view>

namespace faultloc {

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

// Parses a full field as a double ("inf", "-inf", "nan" accepted).
// Throws Error("parse") when the field is not a complete number.
double parse_double(std::string_view text);

}  // namespace faultloc
