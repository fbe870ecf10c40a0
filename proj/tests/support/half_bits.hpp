#pragma once

// Reference binary64 -> binary16 conversion done entirely in integer
// arithmetic on the bit pattern, independent of the library's rounding code.

#include <bit>
#include <cmath>
#include <cstdint>

namespace testsupport {

inline std::uint16_t double_to_half_bits(double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  const std::uint16_t sign = static_cast<std::uint16_t>((bits >> 48) & 0x8000u);
  const int exp = static_cast<int>((bits >> 52) & 0x7ff);
  std::uint64_t frac = bits & ((std::uint64_t{1} << 52) - 1);

  if (exp == 0x7ff) return sign | (frac ? 0x7e00u : 0x7c00u);
  if (exp == 0 && frac == 0) return sign;

  // Value = mant * 2^(e - 52) with mant carrying the implicit bit.
  std::uint64_t mant = exp ? (frac | (std::uint64_t{1} << 52)) : frac;
  int e = exp ? exp - 1023 : -1022;

  // binary16 keeps 10 fraction bits for e >= -14, fewer below.
  int keep_shift;  // bits of mant to drop
  if (e >= -14) {
    keep_shift = 42;
  } else {
    keep_shift = 42 + (-14 - e);
  }
  std::uint64_t q;
  if (keep_shift >= 64) {
    q = 0;
    // Everything drops; round to zero or the smallest subnormal.
    const bool above_half = keep_shift == 64 ? mant > (std::uint64_t{1} << 63) : false;
    q = above_half ? 1 : 0;
  } else {
    q = mant >> keep_shift;
    const std::uint64_t rem = mant & ((std::uint64_t{1} << keep_shift) - 1);
    const std::uint64_t half = std::uint64_t{1} << (keep_shift - 1);
    if (rem > half || (rem == half && (q & 1))) ++q;
  }

  if (e >= -14) {
    // q in [2^10, 2^11]; carry can bump the exponent.
    int he = e + 15;
    if (q == (std::uint64_t{1} << 11)) {
      q >>= 1;
      ++he;
    }
    if (he >= 31) return sign | 0x7c00u;
    return static_cast<std::uint16_t>(sign | (he << 10) | (q & 0x3ffu));
  }
  // Subnormal: q in [0, 2^10]; q == 2^10 is the smallest normal, which the
  // encoding below produces naturally.
  return static_cast<std::uint16_t>(sign | q);
}

inline double half_bits_to_double(std::uint16_t h) {
  const int sign = (h & 0x8000u) ? -1 : 1;
  const int exp = (h >> 10) & 0x1f;
  const int frac = h & 0x3ff;
  if (exp == 31) return frac ? std::nan("") : sign * INFINITY;
  if (exp == 0) return sign * std::ldexp(frac, -24);
  return sign * std::ldexp(frac + 1024, exp - 25);
}

inline double round_half_reference(double x) { return half_bits_to_double(double_to_half_bits(x)); }

}  // namespace testsupport
