#pragma once

#include <array>
#include <charconv>
#include <string>

namespace coastfpca {

/// Shortest round-trip decimal form of v (std::to_chars); keeps CSV and
/// JSON artifacts byte-stable across reruns.
inline std::string fmt_double(double v) {
  std::array<char, 32> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

}  // namespace coastfpca
