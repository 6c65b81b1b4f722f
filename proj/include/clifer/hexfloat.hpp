#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>

#include "errors.hpp"

namespace clifer {

// Snapshots store doubles as hex-floats so a round trip is bit-exact.
inline std::string to_hexfloat(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  if (ec != std::errc{}) throw DataError("cannot format double");
  return std::string(buf, end);
}

inline double from_hexfloat(std::string_view s) {
  // to_chars omits the 0x prefix; accept it anyway for hand-written files.
  bool negative = false;
  if (!s.empty() && s.front() == '-') {
    negative = true;
    s.remove_prefix(1);
  }
  if (s.size() > 1 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s.remove_prefix(2);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError("malformed hex-float '" + std::string(s) + "'");
  return negative ? -v : v;
}

}  // namespace clifer
