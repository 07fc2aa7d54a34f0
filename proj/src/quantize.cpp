#include "dlic/quantize.hpp"

#include <algorithm>
#include <limits>

namespace dlic {

namespace {

inline int32_t clip_to_bits(int64_t v, int bits) {
  const int64_t lo = -(int64_t(1) << (bits - 1));
  const int64_t hi = (int64_t(1) << (bits - 1)) - 1;
  return int32_t(std::clamp(v, lo, hi));
}

}  // namespace

QuantizedTensor quantize_affine(const FloatTensor& v, const QuantizerSpec& spec) {
  v.validate();
  spec.validate();

  QuantizedTensor out;
  out.shape = v.shape;
  out.data.resize(v.size());
  out.bits = spec.bits;
  out.scales = spec.scales;
  out.zero_point = spec.zero_point;

  if (spec.granularity == Granularity::PerChannel) {
    if (v.shape.empty() || spec.scales.size() != v.shape[0])
      throw ShapeError("quantize_affine: per-channel scale count != channel count");
    const size_t per_ch = v.size() / std::max<size_t>(1, v.shape[0]);
    for (size_t c = 0; c < v.shape[0]; ++c) {
      const double inv = 1.0 / spec.scales[c];
      for (size_t i = 0; i < per_ch; ++i) {
        const size_t idx = c * per_ch + i;
        out.data[idx] = clip_to_bits(round_away(v.data[idx] * inv), spec.bits);
      }
    }
  } else {
    const double inv = 1.0 / spec.scale();
    for (size_t i = 0; i < v.size(); ++i)
      out.data[i] = clip_to_bits(round_away(v.data[i] * inv) + spec.zero_point, spec.bits);
  }
  return out;
}

FloatTensor dequantize(const QuantizedTensor& q) {
  q.validate();
  FloatTensor out;
  out.shape = q.shape;
  out.data.resize(q.size());
  if (q.per_channel()) {
    const size_t per_ch = q.size() / std::max<size_t>(1, q.shape[0]);
    for (size_t c = 0; c < q.shape[0]; ++c)
      for (size_t i = 0; i < per_ch; ++i) {
        const size_t idx = c * per_ch + i;
        out.data[idx] = float(double(q.scales[c]) * q.data[idx]);
      }
  } else {
    const double s = q.scales[0];
    for (size_t i = 0; i < q.size(); ++i)
      out.data[i] = float(s * q.data[i] - s * q.zero_point);
  }
  return out;
}

QuantizerSpec minmax_quantizer(std::span<const float> activations, int bits) {
  if (activations.empty()) throw ArgumentError("minmax_quantizer: empty input");
  float lo = activations[0], hi = activations[0];
  for (float v : activations) {
    if (!std::isfinite(v)) throw ArgumentError("minmax_quantizer: non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) throw DegenerateError("minmax_quantizer: constant tensor");

  const double levels = double((int64_t(1) << bits) - 1);
  const double s = (double(hi) - double(lo)) / levels;
  QuantizerSpec spec;
  spec.bits = bits;
  spec.symmetric = false;
  spec.granularity = Granularity::PerTensor;
  spec.scales = {float(s)};
  spec.zero_point = int32_t(-round_away(double(lo) / s));
  return spec;
}

float grid_search_weight_scale(std::span<const float> filter,
                               std::span<const float> grid, int bits) {
  if (grid.empty()) throw ArgumentError("grid_search_weight_scale: empty grid");
  for (float s : grid)
    if (!(s > 0.f)) throw ArgumentError("grid_search_weight_scale: non-positive candidate");

  double best_err = std::numeric_limits<double>::infinity();
  float best_s = grid[0];
  for (float s : grid) {
    double err = 0.0;
    const double inv = 1.0 / s;
    for (float w : filter) {
      const int32_t q = clip_to_bits(round_away(w * inv), bits);
      const double d = double(s) * q - w;
      err += d * d;
    }
    // ties break toward the smaller step
    if (err < best_err || (err == best_err && s < best_s)) {
      best_err = err;
      best_s = s;
    }
  }
  return best_s;
}

std::vector<float> weight_scale_grid(std::span<const float> filter, int bits,
                                     int candidates) {
  float amax = 0.f;
  for (float w : filter) amax = std::max(amax, std::abs(w));
  const double qmax = double((int64_t(1) << (bits - 1)) - 1);
  double s_mm = double(amax) / qmax;
  if (!(s_mm > 0.0)) s_mm = 1.0 / qmax;  // all-zero filter: any step reproduces it
  std::vector<float> grid;
  grid.reserve(candidates);
  for (int i = 0; i < candidates; ++i) {
    const double t = candidates == 1 ? 0.0 : double(i) / (candidates - 1);
    grid.push_back(float(s_mm * (0.2 + t * 1.0)));
  }
  return grid;
}

}  // namespace dlic
