#pragma once

#include <charconv>
#include <stdexcept>
#include <string>

namespace adabias::detail {

// Shortest round-trip decimal form, so emitted CSV/JSON is byte-stable.
inline std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf, ptr);
}

}  // namespace adabias::detail
