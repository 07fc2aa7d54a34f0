#pragma once

#include <cstdint>
#include <vector>

#include "dlic/requant.hpp"
#include "dlic/tensor.hpp"

namespace dlic {

enum class LayerKind : uint8_t { Conv2d = 0, MaskedConv2d = 1, Conv1x1 = 2 };
enum class Activation : uint8_t { Identity = 0, Relu = 1, LeakyRelu = 2 };

// Static layer topology shared by the float and the quantized graphs.
// Square kernels, stride 1, same-padding.
struct LayerDesc {
  LayerKind kind = LayerKind::Conv2d;
  uint32_t in_ch = 0;
  uint32_t out_ch = 0;
  uint32_t ksize = 1;
  Activation act = Activation::Identity;
  float leaky_slope = 0.f;

  uint32_t pad() const { return ksize / 2; }
  size_t weight_count() const {
    return size_t(out_ch) * in_ch * ksize * ksize;
  }
  void validate() const;
};

// Raster-causal kernel mask: 1 for strictly-past taps, 0 for the center and
// every later position. Row-major [ky][kx].
std::vector<uint8_t> raster_mask(uint32_t ksize);

struct FloatLayer {
  LayerDesc desc;
  std::vector<float> weights;  // [out][in][ky][kx]
  std::vector<float> bias;     // [out]
};

// Quantized layer: 8-bit per-channel weights, absorbed 32-bit bias, and the
// per-output-channel dyadic requantization into the next activation domain.
struct QuantLayer {
  LayerDesc desc;
  std::vector<int8_t> weights;        // [out][in][ky][kx]
  std::vector<float> weight_scales;   // per output channel
  std::vector<float> float_weights;   // originals, never read on the coding path
  std::vector<int32_t> bias;          // absorbed integer bias
  std::vector<float> float_bias;
  QuantizerSpec in_quant;             // per-tensor activation quantizer of the input
  QuantizerSpec out_quant;
  std::vector<RequantParams> requant; // one per output channel
};

// Worst-case |accumulation| of an 8-bit conv through this layer, including
// the absorbed bias; layers whose bound reaches 2^31 are rejected at
// quantization time.
int64_t accumulator_bound(const QuantLayer& layer);

void validate_quant_layer(const QuantLayer& layer);

}  // namespace dlic
