#pragma once

#include <cstdio>
#include <string>

namespace ppmine {

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

// 9 significant digits, used by the neighbor-table dump
inline std::string format_sig9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// fraction in [0,1] rendered as a percentage with 2 decimals, e.g. "87.08"
inline std::string format_percent(double fraction) {
  return format_fixed(100.0 * fraction, 2);
}

}  // namespace ppmine
