#include "dlic/toygen.hpp"

#include <cmath>

#include "dlic/engine.hpp"

namespace dlic {

namespace {

FloatLayer make_layer(PinnedNormal& rng, LayerKind kind, uint32_t in_ch,
                      uint32_t out_ch, uint32_t ksize, Activation act,
                      float slope, float weight_scale) {
  FloatLayer l;
  l.desc.kind = kind;
  l.desc.in_ch = in_ch;
  l.desc.out_ch = out_ch;
  l.desc.ksize = ksize;
  l.desc.act = act;
  l.desc.leaky_slope = slope;

  const double fan_in = double(in_ch) * ksize * ksize;
  const double sd = weight_scale / std::sqrt(fan_in);
  l.weights.resize(l.desc.weight_count());
  for (float& w : l.weights) w = float(rng() * sd);
  if (kind == LayerKind::MaskedConv2d) {
    const std::vector<uint8_t> mask = raster_mask(ksize);
    const size_t taps = mask.size();
    for (size_t i = 0; i < l.weights.size(); ++i)
      if (!mask[i % taps]) l.weights[i] = 0.f;
  }
  l.bias.resize(out_ch);
  for (float& b : l.bias) b = float(rng() * 0.1);
  return l;
}

}  // namespace

FloatGraph make_toy_graph(uint64_t seed) {
  PinnedNormal rng(seed * 0x9E3779B97F4A7C15ull + 1);
  FloatGraph g;
  g.y_channels = 4;
  g.z_channels = 2;
  g.mix_k = 2;
  g.z_prior_sigma = 3.0;

  g.hyper.push_back(make_layer(rng, LayerKind::Conv2d, 2, 8, 3,
                               Activation::LeakyRelu, 0.125f, 1.0f));
  g.hyper.push_back(
      make_layer(rng, LayerKind::Conv2d, 8, 8, 3, Activation::Relu, 0.f, 1.0f));
  g.context.push_back(make_layer(rng, LayerKind::MaskedConv2d, 4, 8, 5,
                                 Activation::Identity, 0.f, 0.8f));
  g.param.push_back(make_layer(rng, LayerKind::Conv1x1, 16, 16, 1,
                               Activation::LeakyRelu, 0.125f, 1.0f));
  FloatLayer fin = make_layer(rng, LayerKind::Conv1x1, 16, 3 * 2 * 4, 1,
                              Activation::Identity, 0.f, 0.5f);
  // Center the parameter bands: mixture weights around 1.0, means around 0,
  // sigmas around 1.5 so predictions stay inside the 65-level band.
  const uint32_t kc = g.mix_k * g.y_channels;
  for (uint32_t i = 0; i < kc; ++i) fin.bias[i] = 1.0f + fin.bias[i] * 0.2f;
  for (uint32_t i = kc; i < 2 * kc; ++i) fin.bias[i] *= 0.5f;
  for (uint32_t i = 2 * kc; i < 3 * kc; ++i) fin.bias[i] = 1.5f + fin.bias[i];
  g.param.push_back(std::move(fin));

  validate_float_graph(g);
  return g;
}

std::pair<SymbolTensor, SymbolTensor> make_symbol_pair(const FloatGraph& g,
                                                       uint64_t seed, uint32_t h,
                                                       uint32_t w,
                                                       double outlier_rate) {
  PinnedNormal rng(seed * 0xD1B54A32D192ED03ull + 17);
  SymbolTensor y, z;
  y.shape = {g.y_channels, h, w};
  z.shape = {g.z_channels, h, w};
  y.data.resize(shape_volume(y.shape));
  z.data.resize(shape_volume(z.shape));
  const uint64_t outlier_cut =
      uint64_t(outlier_rate * double(~uint64_t(0)));
  for (int32_t& v : y.data) {
    v = int32_t(std::llround(rng() * 2.5));
    if (rng.raw() < outlier_cut) {
      // push far past the in-range band on either side
      const bool up = (rng.raw() & 1) != 0;
      v = up ? v + 500 : v - 500;
    }
  }
  for (int32_t& v : z.data) {
    v = int32_t(std::llround(rng() * 2.0));
    if (rng.raw() < outlier_cut / 2) {
      // hyper-latent outliers take the escape path of the factorized prior
      const bool up = (rng.raw() & 1) != 0;
      v = up ? v + 200 : v - 200;
    }
  }
  return {std::move(y), std::move(z)};
}

std::vector<CalibPair> make_calibration_batch(const FloatGraph& g, uint64_t seed,
                                              size_t count, uint32_t h, uint32_t w) {
  std::vector<CalibPair> batch;
  batch.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    auto [y, z] = make_symbol_pair(g, seed + i, h, w, 0.0);
    CalibPair pair;
    pair.y.shape = y.shape;
    pair.y.data.assign(y.data.begin(), y.data.end());
    pair.z.shape = z.shape;
    pair.z.data.assign(z.data.begin(), z.data.end());
    batch.push_back(std::move(pair));
  }
  return batch;
}

Model make_toy_model(uint64_t seed, uint32_t calib_h, uint32_t calib_w,
                     size_t calib_count) {
  const FloatGraph g = make_toy_graph(seed);
  const std::vector<CalibPair> batch =
      make_calibration_batch(g, seed + 1000, calib_count, calib_h, calib_w);
  const CalibrationReport report = calibrate(g, batch);
  return quantize_graph(g, report);
}

}  // namespace dlic
