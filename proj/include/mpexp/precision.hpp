#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mpexp {

/// A binary floating-point format emulated on top of binary64 storage.
///
/// `significand_bits` counts the implicit leading bit, so binary32 is
/// (24, 8). Only round-to-nearest-even is modelled.
struct FloatFormat {
  std::string name;
  int significand_bits = 53;
  int exponent_bits = 11;
  bool subnormals = true;

  int emax() const { return (1 << (exponent_bits - 1)) - 1; }
  int emin() const { return 1 - emax(); }

  /// Unit roundoff times two, 2^(1 - significand_bits).
  double epsilon() const;
  /// Largest finite magnitude, (2 - 2^(1-t)) * 2^emax.
  double max_finite() const;
  /// Smallest positive normal number, 2^emin.
  double min_normal() const;

  /// True when rounding into this format is the identity on binary64.
  bool is_working() const { return significand_bits >= 53 && exponent_bits >= 11; }

  /// Bytes a value of this format occupies in memory (tf32 lives in 32-bit words).
  int storage_bytes() const;

  friend bool operator==(const FloatFormat& a, const FloatFormat& b) {
    return a.significand_bits == b.significand_bits && a.exponent_bits == b.exponent_bits &&
           a.subnormals == b.subnormals;
  }
};

namespace formats {
FloatFormat fp64();
FloatFormat fp32();
FloatFormat tf32();  // 11-bit significand, 8-bit exponent, flushes subnormals
FloatFormat fp16();
FloatFormat bf16();
}  // namespace formats

/// Looks up a preset by name. Accepts "double", "single", "tf32", "half",
/// "bfloat16" plus the aliases fp64/fp32/fp16/bf16. Throws std::invalid_argument.
FloatFormat format_by_name(std::string_view name);

/// All presets in decreasing precision order.
std::vector<FloatFormat> all_formats();

/// Round `x` to the nearest value of `fmt` (ties to even) and return it as a double.
///
/// Overflow produces +/-inf; NaN propagates. Formats without subnormals round
/// tiny values to 0 or +/-min_normal.
double round_to(double x, const FloatFormat& fmt);

std::vector<double> round_vec(std::span<const double> v, const FloatFormat& fmt);
void round_in_place(std::span<double> v, const FloatFormat& fmt);

/// round_to(a + b); inputs are expected to be representable in `fmt` already.
inline double chopped_add(double a, double b, const FloatFormat& fmt) { return round_to(a + b, fmt); }
inline double chopped_mul(double a, double b, const FloatFormat& fmt) { return round_to(a * b, fmt); }

/// Precomputed rounding parameters for the hot loops of the chopped kernels.
class Rounder {
 public:
  explicit Rounder(const FloatFormat& fmt);

  double operator()(double x) const;
  bool identity() const { return identity_; }

 private:
  double round_small(double x) const;

  bool identity_;
  bool subnormals_;
  int shift_;            // discarded binary64 fraction bits
  int emin_;
  int emax_;
  int significand_bits_;
  double max_finite_;
  double min_normal_;
  std::uint64_t half_minus_one_;
  std::uint64_t keep_mask_;
};

}  // namespace mpexp
