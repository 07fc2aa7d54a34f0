#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dlic/cdf.hpp"
#include "dlic/coder.hpp"
#include "dlic/engine.hpp"

namespace dlic {

// Mixture query resolved into direct table pointers; usable both against the
// shared LUT set and against the single shipped hyper-prior table.
struct ResolvedGmm {
  struct Comp {
    const uint16_t* table = nullptr;
    int32_t mean_floor = 0;
    uint32_t weight = 0;
  };
  std::array<Comp, kMaxMixture> comp{};
  int count = 0;
  uint32_t range = 0;    // inner half-range R
  uint32_t cdf_max = 0;

  // Aggregate cumulate below y; monotone non-decreasing in y.
  uint32_t cum(int64_t y) const;
  uint32_t total() const;
  int32_t floor_min() const;
  int32_t floor_max() const;
  // Upper cumulate of the escape placeholder interval [0, bound).
  uint32_t escape_bound() const;
};

ResolvedGmm resolve_query(const GmmQuery& q, const LutSet& luts);
ResolvedGmm resolve_single_table(const uint16_t* table, uint32_t range,
                                 uint32_t cdf_max);

// Per-channel query built from the network outputs at one position: weights
// clipped to [0, 4096] (an all-zero vector is repaired to uniform ones),
// means split into floor and decimal level, sigmas binned.
GmmQuery query_for_channel(const PositionParams& p, uint32_t channel);

// Symbol coding. In-range symbols take the arithmetic path over
// [cum(y), cum(y+1)); symbols whose interval is empty or saturated are
// escape-coded: the value goes to the escape bit section as an
// exponential-Golomb code and the placeholder interval [0, escape_bound)
// goes to the arithmetic stream.
void gmm_encode_symbol(RangeEncoder& enc, BitWriter& escape,
                       const ResolvedGmm& g, int32_t symbol);
int32_t gmm_decode_symbol(RangeDecoder& dec, BitReader& escape,
                          const ResolvedGmm& g);

// Byte-exact coded representation of one (latent, hyper-latent) pair.
struct EncodedStreams {
  std::vector<uint8_t> hyper;
  std::vector<uint8_t> main;
  std::vector<uint8_t> escape;
  uint64_t escape_bits = 0;
};

// Raster-order autoregressive coding loop: the hyper-latent is coded first
// against the shipped factorized table, then each latent position is coded
// against the parameters predicted by the integer entropy path.
EncodedStreams encode_tensor(const Model& model, const LutSet& luts,
                             const SymbolTensor& y, const SymbolTensor& z);

std::pair<SymbolTensor, SymbolTensor> decode_tensor(const Model& model,
                                                    const LutSet& luts,
                                                    const EncodedStreams& streams,
                                                    const Shape& y_shape,
                                                    const Shape& z_shape);

// Model cross-entropy of the coded symbols in bits (sum of -log2 of each
// symbol's coding probability), plus the escape count. Matches the intervals
// the coder consumes; used by the rate meters.
struct RateStats {
  double ideal_bits = 0.0;
  uint64_t symbols = 0;
  uint64_t escapes = 0;
};
void accumulate_rate(RateStats& stats, const ResolvedGmm& g, int32_t symbol);

}  // namespace dlic
