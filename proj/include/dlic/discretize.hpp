#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dlic/error.hpp"

namespace dlic {

// Entropy-parameter discretization constants. The parameter network emits
// 16-bit values at a fixed step of 2^-6; sigma is binned into 9 binary-log
// major levels with 8 linear minors each (65 distinct reconstruction values,
// sigma in [0.125, 32]), and the decimal part of the mean into 64 levels.
inline constexpr int kParamFracBits = 6;
inline constexpr float kParamScale = 1.0f / 64.0f;
inline constexpr int32_t kSigmaQMin = 8;     // 0.125 at step 2^-6
inline constexpr int32_t kSigmaQMax = 2048;  // 32 at step 2^-6
inline constexpr int kSigmaLevels = 65;
inline constexpr int kMeanLevels = 64;

// floor(log2(q)) for q >= 1 via a branch-free five-step ladder on the highest
// set bit; no floating point, no platform intrinsics.
inline int int_log2(int32_t q) {
  if (q <= 0) throw ArgumentError("int_log2: input must be positive");
  uint32_t v = uint32_t(q);
  int r = 0, s = 0;
  s = int(v > 0xFFFFu) << 4; v >>= s; r |= s;
  s = int(v > 0xFFu) << 3;   v >>= s; r |= s;
  s = int(v > 0xFu) << 2;    v >>= s; r |= s;
  s = int(v > 0x3u) << 1;    v >>= s; r |= s;
  r |= int(v > 0x1u);
  return r;
}

struct SigmaIndex {
  int major = 0;  // 0..8
  int minor = 0;  // 0..8; minor 8 aliases major+1, minor 0
  int combined() const { return 8 * major + minor; }
};

// Calculation-based sigma binning. Total over all 16-bit inputs: the raw
// value is clipped to [8, 2048] first. Values between two levels round up to
// the level above (the conservative direction for coding). Integer
// arithmetic only.
inline SigmaIndex sigma_bin(int32_t q_sigma) noexcept {
  int32_t q = q_sigma;
  if (q < kSigmaQMin) q = kSigmaQMin;
  if (q > kSigmaQMax) q = kSigmaQMax;
  const int b = int_log2(q);  // 3..11
  const int32_t e1 = int32_t(1) << b;
  const int32_t e2 = int32_t(1) << (b - 3);
  SigmaIndex idx;
  idx.major = b - 3;
  idx.minor = int((q - e1 + e2 - 1) / e2);  // round-up division
  return idx;
}

// Reconstruction value for a combined index in [0, 64]:
// sigma_min * (2^major + minor * 2^(major-3)). Offline/testing use only.
double sigma_reconstruct(int combined);

struct MeanIndex {
  int32_t floor_mean = 0;  // floor(mu), mu = q/64
  int frac_index = 0;      // decimal part of mu as one of 64 levels
};

// Splits a 16-bit mean into floor(mu) and the decimal-part level. Exact,
// since the 2^-6 output step makes every representable decimal its own level.
inline MeanIndex mean_split(int32_t q_mean) noexcept {
  MeanIndex m;
  m.floor_mean = q_mean >> kParamFracBits;  // arithmetic shift = floor division
  m.frac_index = int(q_mean & (kMeanLevels - 1));
  return m;
}

// The 64 lower bin boundaries in the quantized domain (64 * reconstruction of
// combined indices 0..63); all exact integers.
std::vector<int32_t> sigma_threshold_table();

// Comparison-based binning: counts levels strictly below the clipped q,
// matching the round-up cell assignment of sigma_bin. Reference semantics of
// the search-based discretizers; used as the oracle against sigma_bin and as
// the benchmark baseline.
int sigma_bin_compare(int32_t q_sigma, std::span<const int32_t> thresholds);

// Batch drivers for benchmarking: calculation-based, element-wise comparison
// scan with early exit, and branchless vectorizable comparison.
void sigma_bin_batch(std::span<const int16_t> q, std::span<uint8_t> out);
void sigma_bin_batch_compare_scan(std::span<const int16_t> q,
                                  std::span<const int32_t> thresholds,
                                  std::span<uint8_t> out);
void sigma_bin_batch_compare_vec(std::span<const int16_t> q,
                                 std::span<const int32_t> thresholds,
                                 std::span<uint8_t> out);

}  // namespace dlic
