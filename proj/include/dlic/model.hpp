#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlic/cdf.hpp"
#include "dlic/layers.hpp"

namespace dlic {

// Fixed per-symbol quantizer for the integer inputs (latent and hyper-latent
// symbols): unit step, zero offset, clipped into int8 as model input.
QuantizerSpec symbol_input_quantizer();

// Shipped cumulative table for the hyper-latent stream, treated as opaque
// side information by the coding path.
struct FactorizedTable {
  uint32_t range = 32;
  uint32_t cdf_max = 4096;
  std::vector<uint16_t> entries;  // 2*range+2, same layout as CdfTable
};

// Full-precision entropy-estimation graph: hyper synthesis over the decoded
// hyper-latent, a raster-causal context model over visible symbols, and the
// parameter network over their channel concatenation.
struct FloatGraph {
  uint32_t y_channels = 0;
  uint32_t z_channels = 0;
  uint32_t mix_k = 1;
  std::vector<FloatLayer> hyper;
  std::vector<FloatLayer> context;
  std::vector<FloatLayer> param;
  double z_prior_sigma = 4.0;  // width of the shipped hyper-latent prior
};

// Quantized model: integer-only on the coding path.
struct Model {
  uint32_t version = 1;
  uint32_t y_channels = 0;
  uint32_t z_channels = 0;
  uint32_t mix_k = 1;
  std::vector<QuantLayer> hyper;
  std::vector<QuantLayer> context;
  std::vector<QuantLayer> param;
  FactorizedTable z_table;

  uint32_t param_out_channels() const { return 3 * mix_k * y_channels; }
};

void validate_float_graph(const FloatGraph& g);
void validate_model(const Model& m);

// Per-layer activation ranges plus grid-searched weight scales gathered from
// a calibration batch on the float graph.
struct CalibrationReport {
  struct LayerCal {
    std::vector<float> weight_scales;  // per output channel
    float out_min = 0.f;
    float out_max = 0.f;
  };
  std::vector<LayerCal> hyper, context, param;
  // Joint range of the hyper and context outputs (they share one quantizer so
  // the parameter network sees a homogeneous concatenation).
  float feature_min = 0.f;
  float feature_max = 0.f;
};

struct CalibPair {
  FloatTensor y;  // latent symbols as floats
  FloatTensor z;
};

CalibrationReport calibrate(const FloatGraph& g, std::span<const CalibPair> batch);

Model quantize_graph(const FloatGraph& g, const CalibrationReport& report);

}  // namespace dlic
