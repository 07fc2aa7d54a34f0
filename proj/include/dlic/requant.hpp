#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "dlic/error.hpp"

namespace dlic {

// Dyadic requantization constants for one layer (or one output channel when
// weights are per-channel quantized). Derived offline; inference uses only
// the integer fields.
struct RequantParams {
  float scale = 0.f;        // real rescale factor s_w*s_in/s_out, offline only
  int32_t mul = 0;          // dyadic multiplier, floor(2^shift * scale)
  int shift = 0;            // 32 - out_bits
  int32_t pre_zero = 0;     // output zero-point absorbed before scaling
  int32_t clip_lo = 0;      // pre-scale clip bounds keeping mul*q inside int32
  int32_t clip_hi = 0;
  int out_bits = 8;
  std::optional<int32_t> neg_mul;  // folded Leaky-ReLU negative-branch multiplier
};

// Integer division by 2^shift rounding to nearest, ties away from zero.
// Pure 32-bit arithmetic; valid for any int32 value (including INT32_MIN)
// and shift in [1, 31].
inline int32_t round_int_div_pow2(int32_t v, int shift) {
  if (v >= 0) {
    const uint32_t u = uint32_t(v);
    return int32_t((u >> shift) + ((u >> (shift - 1)) & 1u));
  }
  const uint32_t u = uint32_t(0) - uint32_t(v);  // magnitude, wrap-safe
  const uint32_t r = (u >> shift) + ((u >> (shift - 1)) & 1u);
  return -int32_t(r);
}

// Compute the dyadic constants for rescale factor m = w_scale*in_scale/out_scale
// feeding a B-bit output quantizer with zero-point out_zero. A leaky slope, when
// given, populates the folded negative branch (shared shift, scaled multiplier).
RequantParams derive_requant(float w_scale, float in_scale, float out_scale,
                             int32_t out_zero, int out_bits,
                             std::optional<float> leaky_slope = {});

// clip(RID(mul * clip(acc + pre_zero, clip_lo, clip_hi), 2^shift), B-bit range).
int32_t requantize_one(int32_t acc, const RequantParams& p);

// Folded Leaky-ReLU: branch multiplier selected on sign(acc) before the
// zero-point addition; otherwise identical to requantize_one.
int32_t requantize_leaky_one(int32_t acc, const RequantParams& p);

void requantize(std::span<const int32_t> acc, const RequantParams& p,
                std::span<int32_t> out);

void requantize_leaky(std::span<const int32_t> acc, const RequantParams& p,
                      std::span<int32_t> out);

}  // namespace dlic
