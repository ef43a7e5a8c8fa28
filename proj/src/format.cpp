#include "qsim/format.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace qsim {

std::string format_fixed(double value, int min_decimals) {
  if (std::isnan(value)) return {};
  std::array<char, 512> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed);
  if (ec != std::errc{}) throw std::runtime_error("number too long to format");
  std::string s(buf.data(), ptr);
  if (std::isinf(value)) return s;
  const auto dot = s.find('.');
  int decimals = 0;
  if (dot == std::string::npos) {
    if (min_decimals > 0) s.push_back('.');
  } else {
    decimals = static_cast<int>(s.size() - dot - 1);
  }
  for (; decimals < min_decimals; ++decimals) s.push_back('0');
  return s;
}

std::string format_shortest(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("number too long to format");
  return std::string(buf.data(), ptr);
}

}  // namespace qsim
