#pragma once

#include <cstdio>
#include <string>

namespace p3f::detail {

/// All emitted numerics use %.12e so identical inputs produce
/// byte-identical files.
inline std::string fmt_e(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12e", v);
  return buf;
}

}  // namespace p3f::detail
