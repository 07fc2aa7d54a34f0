#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dlic/model.hpp"

namespace dlic {

// CHW plane views over contiguous buffers.
struct PlaneDims {
  uint32_t ch = 0, h = 0, w = 0;
  size_t volume() const { return size_t(ch) * h * w; }
};

// 8-bit integer convolution with 32-bit accumulation. Activation is not
// applied here; it folds into the requantization step. Out-of-image taps
// read the input zero-point (the quantized image of real zero).
void conv_forward_int(std::span<const int8_t> in, PlaneDims in_dims,
                      const QuantLayer& layer, std::span<int32_t> out);

// Same accumulation evaluated at a single spatial position.
void conv_at_int(std::span<const int8_t> in, PlaneDims in_dims,
                 const QuantLayer& layer, uint32_t x, uint32_t y,
                 std::span<int32_t> out);

// Activation + per-channel requantization of a full accumulation tensor.
void activate_requantize(std::span<const int32_t> acc, const QuantLayer& layer,
                         uint32_t per_channel, std::span<int32_t> out);

// Runs a stage (chain of quantized layers) over full planes; int8 output.
std::vector<int8_t> run_stage_int(std::span<const QuantLayer> layers,
                                  std::span<const int8_t> input, PlaneDims dims);

// Clips integer symbols into the int8 model-input domain.
std::vector<int8_t> clip_symbols_int8(const SymbolTensor& t);

// Entropy parameters for every latent channel at one spatial position:
// mix_k (weight, mean, std) triples per channel, 16-bit, step 2^-6.
struct PositionParams {
  uint32_t channels = 0;
  uint32_t mix_k = 0;
  std::vector<int16_t> vals;  // [3][k][c] flattened

  int16_t weight(uint32_t c, uint32_t k) const { return vals[k * channels + c]; }
  int16_t mean(uint32_t c, uint32_t k) const {
    return vals[(mix_k + k) * channels + c];
  }
  int16_t stddev(uint32_t c, uint32_t k) const {
    return vals[(2 * mix_k + k) * channels + c];
  }
};

// Integer entropy path: hyper features are computed once per tensor, the
// context and parameter networks per position. Deterministic: identical
// inputs give bit-identical parameters on every run, build and platform.
class EntropyPath {
 public:
  EntropyPath(const Model& model, const SymbolTensor& z);

  // y_visible holds the clipped symbols decoded so far (raster order); taps at
  // the current or later positions are masked out by the context kernel.
  PositionParams params_at(std::span<const int8_t> y_visible, uint32_t x,
                           uint32_t y) const;

  const PlaneDims& latent_dims() const { return y_dims_; }

 private:
  const Model& model_;
  PlaneDims y_dims_;
  PlaneDims feat_dims_;
  std::vector<int8_t> hyper_feats_;
};

// Float twin of the entropy path, used for calibration and drift tracking.
struct FloatPositionParams {
  uint32_t channels = 0;
  uint32_t mix_k = 0;
  std::vector<float> vals;  // same layout as PositionParams

  float weight(uint32_t c, uint32_t k) const { return vals[k * channels + c]; }
  float mean(uint32_t c, uint32_t k) const { return vals[(mix_k + k) * channels + c]; }
  float stddev(uint32_t c, uint32_t k) const {
    return vals[(2 * mix_k + k) * channels + c];
  }
};

class FloatEntropyPath {
 public:
  FloatEntropyPath(const FloatGraph& graph, const FloatTensor& z);

  FloatPositionParams params_at(const FloatTensor& y_visible, uint32_t x,
                                uint32_t y) const;

 private:
  const FloatGraph& graph_;
  PlaneDims y_dims_;
  PlaneDims feat_dims_;
  std::vector<float> hyper_feats_;
};

// Float conv/stage helpers (calibration path).
void conv_forward_float(std::span<const float> in, PlaneDims in_dims,
                        const FloatLayer& layer, std::span<float> out);
std::vector<float> run_stage_float(std::span<const FloatLayer> layers,
                                   std::span<const float> input, PlaneDims dims,
                                   std::vector<std::pair<float, float>>* ranges);

}  // namespace dlic
