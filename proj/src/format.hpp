#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "bhm/accum.hpp"

namespace bhm {

// 17 significant digits: enough for a bit-exact round trip of any finite double.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_real(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || !std::isfinite(v))
    throw Error("bad real number '" + tok + "'");
  return v;
}

}  // namespace bhm
