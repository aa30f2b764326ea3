#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

namespace spfx {

// Deterministic numeric formatting for CSV output. %.10g keeps columns
// readable while preserving enough digits for downstream comparisons;
// NaN always prints as "nan" (MSVC/libc spellings differ).
inline std::string csv_num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

inline std::string csv_num(std::uint64_t x) { return std::to_string(x); }

}  // namespace spfx
