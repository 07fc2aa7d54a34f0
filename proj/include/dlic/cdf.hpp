#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dlic/discretize.hpp"

namespace dlic {

// Identity of the normal-CDF evaluator used by the builder. Tables are built
// once and shipped, so the builder may use floats; the tag travels in the
// LUT file header so mismatched builders are detectable.
inline constexpr const char* kCdfBuilderTag = "libm-erfc-v1";

struct LutConfig {
  uint32_t range = 64;      // inner symbol half-range R
  uint32_t cdf_max = 4096;  // frequency-cumulate normalizer, 2^12

  uint32_t table_len() const { return 2 * range + 2; }
  void validate() const;
};

// One cumulative table: table_len() entries, entries[0] = 0, strictly
// increasing up to entries[2R] = cdf_max, final slot reserved.
using CdfTable = std::vector<uint16_t>;

// The full 65x64 family of discretized-Gaussian tables, keyed by
// mean_frac_index * 65 + sigma_combined.
struct LutSet {
  LutConfig config;
  std::vector<uint16_t> entries;  // kSigmaLevels*kMeanLevels tables, contiguous

  static constexpr uint32_t table_count() {
    return uint32_t(kSigmaLevels) * uint32_t(kMeanLevels);
  }
  const uint16_t* table(uint32_t outer) const {
    if (outer >= table_count()) throw ArgumentError("LutSet: outer index out of range");
    return entries.data() + size_t(outer) * config.table_len();
  }
};

// Cumulative table of round(cdf_max * Phi((k - R + 0.5 - mean_frac)/sigma)),
// monotone-repaired so every interior symbol keeps frequency >= 1 and the
// endpoints are pinned to 0 and cdf_max exactly.
CdfTable build_cdf_table(double sigma, double mean_frac, const LutConfig& cfg);

// Table for one (sigma, mean) index pair of the discretization lattice.
CdfTable build_gaussian_cdf(int sigma_combined, int mean_frac_index,
                            const LutConfig& cfg);

// All 4160 tables in fixed (mean outer, sigma inner) order; bit-identical
// across rebuilds from the same config.
LutSet build_all_luts(const LutConfig& cfg);

// Mixture component resolved against a LUT set: outer table index, floored
// mean and non-negative weight (capped at cdf_max by the query builder).
struct GmmComponent {
  uint32_t outer = 0;
  int32_t mean_floor = 0;
  uint32_t weight = 0;
};

inline constexpr int kMaxMixture = 4;
inline constexpr uint32_t kWeightCap = 4096;

struct GmmQuery {
  std::array<GmmComponent, kMaxMixture> comp{};
  int count = 0;
  void validate() const;
};

// Aggregate frequency cumulate below symbol y: per component the inner lookup
// saturates to 0 / cdf_max outside [-R, R], then weights are accumulated in
// 32-bit (bounded by 4 * 2^12 * 2^12 = 2^26).
uint32_t gmm_cdf_value(int64_t y, const GmmQuery& q, const LutSet& luts);

// Coder normalizer: sum of weight * cdf_max over components.
uint32_t gmm_total(const GmmQuery& q, const LutSet& luts);

}  // namespace dlic
