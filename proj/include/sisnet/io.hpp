#pragma once

#include <charconv>
#include <string>
#include <vector>

namespace sisnet {

/// Shortest round-trip decimal representation ('.' decimal separator).
inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

/// Joins fields with commas.
inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out += ',';
    out += fields[k];
  }
  out += '\n';
  return out;
}

}  // namespace sisnet
