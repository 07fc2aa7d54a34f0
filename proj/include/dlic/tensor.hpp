#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dlic/error.hpp"

namespace dlic {

using Shape = std::vector<uint32_t>;

inline size_t shape_volume(const Shape& s) {
  size_t n = 1;
  for (uint32_t d : s) n *= d;
  return n;
}

// Row-major float tensor.
struct FloatTensor {
  Shape shape;
  std::vector<float> data;

  size_t size() const { return data.size(); }

  void validate() const {
    if (data.size() != shape_volume(shape))
      throw ShapeError("FloatTensor: data length does not match shape");
    for (float v : data)
      if (!std::isfinite(v)) throw ArgumentError("FloatTensor: non-finite value");
  }
};

// Integer symbol tensor (the coding payload). Values may exceed any fixed
// bit-width; out-of-range symbols are handled by the escape coder.
struct SymbolTensor {
  Shape shape;
  std::vector<int32_t> data;

  size_t size() const { return data.size(); }

  void validate() const {
    if (data.size() != shape_volume(shape))
      throw ShapeError("SymbolTensor: data length does not match shape");
  }
};

enum class Granularity { PerTensor, PerChannel };

// Uniform affine quantizer parameters. Per-channel granularity is reserved
// for weights and is always symmetric; asymmetric quantizers are per-tensor.
struct QuantizerSpec {
  int bits = 8;
  bool symmetric = true;
  Granularity granularity = Granularity::PerTensor;
  std::vector<float> scales;  // one entry per tensor, or per channel
  int32_t zero_point = 0;

  float scale() const { return scales.at(0); }

  void validate() const {
    if (bits != 8 && bits != 16 && bits != 32)
      throw QuantizerError("QuantizerSpec: unsupported bit width");
    if (scales.empty()) throw QuantizerError("QuantizerSpec: no scales");
    for (float s : scales)
      if (!(s > 0.f) || !std::isfinite(s))
        throw QuantizerError("QuantizerSpec: scale must be positive and finite");
    if (granularity == Granularity::PerTensor && scales.size() != 1)
      throw QuantizerError("QuantizerSpec: per-tensor spec carries one scale");
    if (granularity == Granularity::PerChannel && !symmetric)
      throw QuantizerError("QuantizerSpec: per-channel quantizers are symmetric only");
    if (symmetric && zero_point != 0)
      throw QuantizerError("QuantizerSpec: symmetric quantizer requires zero_point 0");
  }
};

// Quantized tensor: integer payload plus the quantizer that produced it.
// dequantize() remaps element q to s*q - s*z.
struct QuantizedTensor {
  Shape shape;
  std::vector<int32_t> data;
  int bits = 8;
  std::vector<float> scales;
  int32_t zero_point = 0;

  size_t size() const { return data.size(); }
  bool per_channel() const { return scales.size() > 1; }

  void validate() const {
    if (data.size() != shape_volume(shape))
      throw ShapeError("QuantizedTensor: data length does not match shape");
    if (bits != 8 && bits != 16 && bits != 32)
      throw QuantizerError("QuantizedTensor: unsupported bit width");
    if (scales.empty()) throw QuantizerError("QuantizedTensor: no scales");
    if (per_channel() && (shape.empty() || scales.size() != shape[0]))
      throw ShapeError("QuantizedTensor: per-channel scale count != channel count");
    const int64_t lo = -(int64_t(1) << (bits - 1));
    const int64_t hi = (int64_t(1) << (bits - 1)) - 1;
    for (int32_t v : data)
      if (v < lo || v > hi) throw QuantizerError("QuantizedTensor: element outside bit range");
  }
};

}  // namespace dlic
