#include "mpexp/precision.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpexp {

double FloatFormat::epsilon() const { return std::ldexp(1.0, 1 - significand_bits); }

double FloatFormat::max_finite() const {
  return std::ldexp(2.0 - std::ldexp(1.0, 1 - significand_bits), emax());
}

double FloatFormat::min_normal() const { return std::ldexp(1.0, emin()); }

int FloatFormat::storage_bytes() const {
  const int bits = significand_bits + exponent_bits;
  if (bits <= 16) return 2;
  if (bits <= 32) return 4;
  return 8;
}

namespace formats {
FloatFormat fp64() { return {"double", 53, 11, true}; }
FloatFormat fp32() { return {"single", 24, 8, true}; }
FloatFormat tf32() { return {"tf32", 11, 8, false}; }
FloatFormat fp16() { return {"half", 11, 5, true}; }
FloatFormat bf16() { return {"bfloat16", 8, 8, true}; }
}  // namespace formats

FloatFormat format_by_name(std::string_view name) {
  if (name == "double" || name == "fp64") return formats::fp64();
  if (name == "single" || name == "fp32") return formats::fp32();
  if (name == "tf32") return formats::tf32();
  if (name == "half" || name == "fp16") return formats::fp16();
  if (name == "bfloat16" || name == "bf16") return formats::bf16();
  throw std::invalid_argument("unknown floating-point format '" + std::string(name) + "'");
}

std::vector<FloatFormat> all_formats() {
  return {formats::fp64(), formats::fp32(), formats::tf32(), formats::fp16(), formats::bf16()};
}

Rounder::Rounder(const FloatFormat& fmt)
    : identity_(fmt.is_working()),
      subnormals_(fmt.subnormals),
      shift_(53 - fmt.significand_bits),
      emin_(fmt.emin()),
      emax_(fmt.emax()),
      significand_bits_(fmt.significand_bits),
      max_finite_(fmt.max_finite()),
      min_normal_(fmt.min_normal()),
      half_minus_one_(0),
      keep_mask_(~std::uint64_t{0}) {
  if (fmt.significand_bits < 2 || fmt.exponent_bits < 2)
    throw std::invalid_argument("format '" + fmt.name + "' needs at least 2 significand and 2 exponent bits");
  if (fmt.significand_bits > 53 || fmt.exponent_bits > 11)
    throw std::invalid_argument("format '" + fmt.name + "' is wider than binary64");
  if (!identity_ && shift_ > 0) {
    half_minus_one_ = (std::uint64_t{1} << (shift_ - 1)) - 1;
    keep_mask_ = ~((std::uint64_t{1} << shift_) - 1);
  }
}

double Rounder::operator()(double x) const {
  if (identity_) return x;
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  const int biased = static_cast<int>((bits >> 52) & 0x7ff);
  if (biased == 0x7ff) return x;
  const int e = biased - 1023;
  if (biased == 0 || e < emin_) return round_small(x);
  if (e > emax_) return std::copysign(std::numeric_limits<double>::infinity(), x);

  // Round-to-nearest-even on the raw encoding: adding (half - 1 + lsb) carries
  // exactly when the discarded tail exceeds half an ulp, or equals it with an
  // odd kept part. A carry into the exponent field is the correct binade bump.
  if (shift_ > 0) {
    const std::uint64_t lsb = (bits >> shift_) & 1u;
    bits = (bits + half_minus_one_ + lsb) & keep_mask_;
  }
  const double r = std::bit_cast<double>(bits);
  if (std::fabs(r) > max_finite_) return std::copysign(std::numeric_limits<double>::infinity(), x);
  return r;
}

double Rounder::round_small(double x) const {
  if (x == 0.0) return x;
  if (subnormals_) {
    // Fixed quantum 2^(emin - t + 1) throughout the subnormal range; scaling by
    // a power of two is exact here.
    const int q = emin_ - (significand_bits_ - 1);
    return std::ldexp(std::nearbyint(std::ldexp(x, -q)), q);
  }
  // No subnormals: round at the value's own exponent, then send anything below
  // the normal range to 0 or +/-min_normal (threshold min_normal / 2).
  const int q = std::ilogb(x) - (significand_bits_ - 1);
  const double c = std::ldexp(std::nearbyint(std::ldexp(x, -q)), q);
  if (std::fabs(c) >= min_normal_) return c;
  if (std::fabs(c) >= 0.5 * min_normal_) return std::copysign(min_normal_, x);
  return std::copysign(0.0, x);
}

double round_to(double x, const FloatFormat& fmt) { return Rounder(fmt)(x); }

std::vector<double> round_vec(std::span<const double> v, const FloatFormat& fmt) {
  std::vector<double> out(v.begin(), v.end());
  round_in_place(out, fmt);
  return out;
}

void round_in_place(std::span<double> v, const FloatFormat& fmt) {
  const Rounder r(fmt);
  if (r.identity()) return;
  for (double& x : v) x = r(x);
}

}  // namespace mpexp
