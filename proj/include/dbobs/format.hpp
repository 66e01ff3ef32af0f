#pragma once

#include <cstdio>
#include <string>

namespace dbobs {

/// 17 significant digits, enough to round-trip a double. Negative zero prints as 0.
inline std::string format_double(double v) {
  if (v == 0.0) v = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace dbobs
