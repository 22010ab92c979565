#pragma once

#include <cstdio>
#include <string>

namespace denscov {

// 17 significant digits: enough for doubles to round-trip exactly.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace denscov
