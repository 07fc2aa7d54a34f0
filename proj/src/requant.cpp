#include "dlic/requant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dlic/quantize.hpp"

namespace dlic {

RequantParams derive_requant(float w_scale, float in_scale, float out_scale,
                             int32_t out_zero, int out_bits,
                             std::optional<float> leaky_slope) {
  if (!(w_scale > 0.f) || !(in_scale > 0.f) || !(out_scale > 0.f))
    throw QuantizerError("derive_requant: scales must be positive");
  if (out_bits != 8 && out_bits != 16)
    throw ArgumentError("derive_requant: output width must be 8 or 16");

  const double m = double(w_scale) * double(in_scale) / double(out_scale);
  if (!(m > 0.0) || !std::isfinite(m))
    throw QuantizerError("derive_requant: invalid rescale factor");

  RequantParams p;
  p.scale = float(m);
  p.out_bits = out_bits;
  p.shift = 32 - out_bits;

  const double out_hi = std::ldexp(1.0, out_bits - 1) - 1.0;  // 2^(B-1)-1
  const double out_lo = -std::ldexp(1.0, out_bits - 1);       // -2^(B-1)

  // A factor at or above 2^(B-1) leaves fewer than two representable inputs;
  // a factor below 2^-shift floors to a zero multiplier. Either way the layer
  // cannot carry information at B bits.
  if (m >= std::ldexp(1.0, out_bits - 1))
    throw DegenerateError("derive_requant: rescale factor too large for output width");
  const int64_t mul64 = int64_t(std::floor(std::ldexp(m, p.shift)));
  if (mul64 <= 0)
    throw DegenerateError("derive_requant: rescale factor below dyadic resolution");
  p.mul = int32_t(mul64);

  int64_t hi = int64_t(std::floor(out_hi / m));
  int64_t lo = int64_t(std::ceil(out_lo / m));
  if (hi < lo) throw DegenerateError("derive_requant: empty pre-scale clip range");
  // Guard the bound against FP slop in the divisions above: the products must
  // stay inside int32 exactly.
  while (int64_t(p.mul) * hi > std::numeric_limits<int32_t>::max()) --hi;
  while (int64_t(p.mul) * lo < std::numeric_limits<int32_t>::min()) ++lo;
  p.clip_hi = int32_t(hi);
  p.clip_lo = int32_t(lo);

  p.pre_zero = int32_t(std::clamp<int64_t>(
      round_away(double(out_zero) / m), std::numeric_limits<int32_t>::min(),
      std::numeric_limits<int32_t>::max()));

  if (leaky_slope) {
    const double a = double(*leaky_slope);
    if (!(a > 0.0) || !(a < 1.0))
      throw ArgumentError("derive_requant: leaky slope must lie in (0, 1)");
    p.neg_mul = int32_t(std::floor(std::ldexp(a * m, p.shift)));
  }
  return p;
}

namespace {

inline int32_t requant_with_mul(int32_t acc, int32_t mul, const RequantParams& p) {
  const int64_t biased = int64_t(acc) + p.pre_zero;
  const int32_t q = int32_t(std::clamp<int64_t>(biased, p.clip_lo, p.clip_hi));
  // mul*q fits int32 by construction of the clip bounds; widen only to keep
  // the C++ multiply well-defined.
  const int32_t prod = int32_t(int64_t(mul) * q);
  const int32_t scaled = round_int_div_pow2(prod, p.shift);
  const int32_t out_hi = int32_t((int64_t(1) << (p.out_bits - 1)) - 1);
  const int32_t out_lo = int32_t(-(int64_t(1) << (p.out_bits - 1)));
  return std::clamp(scaled, out_lo, out_hi);
}

}  // namespace

int32_t requantize_one(int32_t acc, const RequantParams& p) {
  return requant_with_mul(acc, p.mul, p);
}

int32_t requantize_leaky_one(int32_t acc, const RequantParams& p) {
  return requant_with_mul(acc, acc >= 0 ? p.mul : *p.neg_mul, p);
}

void requantize(std::span<const int32_t> acc, const RequantParams& p,
                std::span<int32_t> out) {
  if (acc.size() != out.size()) throw ShapeError("requantize: size mismatch");
  for (size_t i = 0; i < acc.size(); ++i) out[i] = requantize_one(acc[i], p);
}

void requantize_leaky(std::span<const int32_t> acc, const RequantParams& p,
                      std::span<int32_t> out) {
  if (!p.neg_mul) throw ContractError("requantize_leaky: negative branch missing");
  if (acc.size() != out.size()) throw ShapeError("requantize_leaky: size mismatch");
  for (size_t i = 0; i < acc.size(); ++i) out[i] = requantize_leaky_one(acc[i], p);
}

}  // namespace dlic
