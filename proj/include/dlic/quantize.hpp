#pragma once

#include <cstdint>
#include <span>

#include "dlic/tensor.hpp"

namespace dlic {

// Artifact-wide rounding: nearest integer, ties away from zero.
// llround has exactly this tie behaviour independent of the FP environment.
inline int64_t round_away(double v) { return std::llround(v); }

// Uniform affine quantization: clip(round(v/s) + z, -2^(B-1), 2^(B-1)-1).
// Per-channel specs quantize along dimension 0.
QuantizedTensor quantize_affine(const FloatTensor& v, const QuantizerSpec& spec);

FloatTensor dequantize(const QuantizedTensor& q);

// Min-max activation calibration: s = (max-min)/(2^B-1), z = -round(min/s).
// Produces an asymmetric per-tensor spec. Constant input is rejected.
QuantizerSpec minmax_quantizer(std::span<const float> activations, int bits);

// Grid search for a symmetric weight scale over one filter: picks the grid
// candidate minimizing the quantize->dequantize L2 error, smaller step on ties.
float grid_search_weight_scale(std::span<const float> filter,
                               std::span<const float> grid, int bits);

// Grid used by the calibration pipeline: candidates linearly spaced in
// [0.2*s_mm, 1.2*s_mm] around the min-max step of the filter.
std::vector<float> weight_scale_grid(std::span<const float> filter, int bits,
                                     int candidates = 100);

}  // namespace dlic
