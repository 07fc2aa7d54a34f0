#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "dlic/model.hpp"

namespace dlic {

// Deterministic standard-normal-ish sampler built on pinned mt19937_64 draws
// (library normal_distribution implementations vary across toolchains; this
// one is bit-stable everywhere).
class PinnedNormal {
 public:
  explicit PinnedNormal(uint64_t seed) : rng_(seed) {}

  double operator()() {
    double s = 0.0;
    for (int i = 0; i < 12; ++i)
      s += double(rng_() >> 40) * (1.0 / 16777216.0);  // 24-bit uniforms
    return s - 6.0;
  }

  uint64_t raw() { return rng_(); }

 private:
  std::mt19937_64 rng_;
};

// Small entropy-estimation graph sized for exhaustive testing: every layer
// kind and activation is exercised, parameters land in sane coding bands.
FloatGraph make_toy_graph(uint64_t seed);

// Random symbol pair for a toy graph; outlier_rate injects symbols far
// outside the coder's in-range band to exercise the escape path.
std::pair<SymbolTensor, SymbolTensor> make_symbol_pair(const FloatGraph& g,
                                                       uint64_t seed, uint32_t h,
                                                       uint32_t w,
                                                       double outlier_rate = 0.0);

// Calibration batch drawn from the same symbol distribution.
std::vector<CalibPair> make_calibration_batch(const FloatGraph& g, uint64_t seed,
                                              size_t count, uint32_t h, uint32_t w);

// Convenience: toy graph -> calibrate -> quantize.
Model make_toy_model(uint64_t seed, uint32_t calib_h = 8, uint32_t calib_w = 8,
                     size_t calib_count = 4);

}  // namespace dlic
