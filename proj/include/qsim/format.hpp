#pragma once

#include <string>

namespace qsim {

/// Shortest fixed-notation text that parses back to exactly `value`, padded
/// with zeros to at least `min_decimals` fractional digits. NaN prints empty.
std::string format_fixed(double value, int min_decimals = 6);

/// Shortest round-trip text, any notation.
std::string format_shortest(double value);

}  // namespace qsim
