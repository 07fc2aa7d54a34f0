#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <random>

#include "dlic/engine.hpp"
#include "dlic/toygen.hpp"
#include "doctest.h"

using namespace dlic;

namespace {

QuantizerSpec unit_quant(int bits = 8) {
  QuantizerSpec q;
  q.bits = bits;
  q.symmetric = true;
  q.granularity = Granularity::PerTensor;
  q.scales = {1.f};
  q.zero_point = 0;
  return q;
}

QuantizerSpec final_quant() {
  QuantizerSpec q;
  q.bits = 16;
  q.symmetric = true;
  q.granularity = Granularity::PerTensor;
  q.scales = {1.f / 64.f};
  q.zero_point = 0;
  return q;
}

QuantLayer make_layer(LayerKind kind, uint32_t in_ch, uint32_t out_ch,
                      uint32_t ksize, std::vector<int8_t> weights,
                      std::vector<int32_t> bias, float w_scale,
                      const QuantizerSpec& in_q, const QuantizerSpec& out_q) {
  QuantLayer l;
  l.desc.kind = kind;
  l.desc.in_ch = in_ch;
  l.desc.out_ch = out_ch;
  l.desc.ksize = ksize;
  l.weights = std::move(weights);
  l.bias = std::move(bias);
  l.weight_scales.assign(out_ch, w_scale);
  l.float_weights.resize(l.weights.size());
  for (size_t i = 0; i < l.weights.size(); ++i)
    l.float_weights[i] = float(l.weights[i]) * w_scale;
  l.float_bias.assign(out_ch, 0.f);
  l.in_quant = in_q;
  l.out_quant = out_q;
  for (uint32_t oc = 0; oc < out_ch; ++oc)
    l.requant.push_back(derive_requant(w_scale, in_q.scale(), out_q.scale(),
                                       out_q.zero_point, out_q.bits));
  return l;
}

// One-channel 1x1 model with clean dyadic constants; every intermediate
// value is hand-checkable.
Model make_hand_model() {
  Model m;
  m.y_channels = 1;
  m.z_channels = 1;
  m.mix_k = 1;

  m.hyper.push_back(make_layer(LayerKind::Conv1x1, 1, 1, 1, {2}, {4}, 0.5f,
                               unit_quant(), unit_quant()));

  std::vector<int8_t> ctx_w(9, 0);
  const std::vector<uint8_t> mask = raster_mask(3);
  for (size_t i = 0; i < 9; ++i) ctx_w[i] = mask[i] ? 1 : 0;
  m.context.push_back(make_layer(LayerKind::MaskedConv2d, 1, 1, 3, std::move(ctx_w),
                                 {5}, 1.f, unit_quant(), unit_quant()));

  m.param.push_back(make_layer(LayerKind::Conv1x1, 2, 3, 1, {1, 1, 2, -1, 3, 0},
                               {1, 2, -3}, 0.25f, unit_quant(), final_quant()));

  LutConfig zc;
  zc.range = 32;
  zc.cdf_max = 4096;
  m.z_table.range = zc.range;
  m.z_table.cdf_max = zc.cdf_max;
  m.z_table.entries = build_cdf_table(3.0, 0.0, zc);

  validate_model(m);
  return m;
}

}  // namespace

TEST_CASE("conv_forward_int hand traces") {
  // 1x1x1x1: q=2, weight 3, bias 1 -> 7
  QuantLayer l = make_layer(LayerKind::Conv1x1, 1, 1, 1, {3}, {1}, 0.5f,
                            unit_quant(), unit_quant());
  std::vector<int8_t> in{2};
  std::vector<int32_t> out(1);
  conv_forward_int(in, PlaneDims{1, 1, 1}, l, out);
  CHECK(out[0] == 7);

  // all-zero input: output is the bias broadcast
  QuantLayer l2 = make_layer(LayerKind::Conv2d, 1, 2, 3,
                             std::vector<int8_t>(18, 7), {11, -4}, 0.5f,
                             unit_quant(), unit_quant());
  std::vector<int8_t> zin(9, 0);
  std::vector<int32_t> zout(2 * 9);
  conv_forward_int(zin, PlaneDims{1, 3, 3}, l2, zout);
  for (int i = 0; i < 9; ++i) {
    CHECK(zout[i] == 11);
    CHECK(zout[9 + i] == -4);
  }
}

TEST_CASE("masked conv excludes the center tap on a delta input") {
  // dense 3x3 with every tap = 1 vs the raster-masked version
  std::vector<int8_t> masked_w(9, 0);
  const std::vector<uint8_t> mask = raster_mask(3);
  for (size_t i = 0; i < 9; ++i) masked_w[i] = mask[i] ? 1 : 0;
  QuantLayer l = make_layer(LayerKind::MaskedConv2d, 1, 1, 3, std::move(masked_w),
                            {0}, 1.f, unit_quant(), unit_quant());

  std::vector<int8_t> in(25, 0);
  in[12] = 1;  // delta at the center of a 5x5 plane
  std::vector<int32_t> out(25);
  conv_forward_int(in, PlaneDims{1, 5, 5}, l, out);

  // at the delta position the center tap is masked: zero response
  CHECK(out[12] == 0);
  // positions whose kernel sees the delta through a past tap respond;
  // brute-force oracle: dense conv with the masked weights
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      int32_t want = 0;
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          const int yy = y + ky - 1, xx = x + kx - 1;
          if (yy == 2 && xx == 2 && mask[size_t(ky) * 3 + kx]) want += 1;
        }
      CHECK(out[size_t(y) * 5 + x] == want);
    }
}

TEST_CASE("full conv equals the per-position evaluation") {
  const Model model = make_toy_model(3);
  std::mt19937_64 rng(63);
  std::vector<int8_t> y8(4 * 6 * 6);
  for (int8_t& v : y8) v = int8_t(int(rng() % 17) - 8);
  const QuantLayer& ctx = model.context[0];
  const PlaneDims dims{4, 6, 6};
  std::vector<int32_t> full(size_t(ctx.desc.out_ch) * 36);
  conv_forward_int(y8, dims, ctx, full);
  std::vector<int32_t> at(ctx.desc.out_ch);
  for (uint32_t y = 0; y < 6; ++y)
    for (uint32_t x = 0; x < 6; ++x) {
      conv_at_int(y8, dims, ctx, x, y, at);
      for (uint32_t oc = 0; oc < ctx.desc.out_ch; ++oc)
        CHECK(full[size_t(oc) * 36 + size_t(y) * 6 + x] == at[oc]);
    }
}

TEST_CASE("hand-checkable parameter pipeline") {
  const Model m = make_hand_model();
  SymbolTensor z{{1, 1, 1}, {4}};
  EntropyPath path(m, z);
  // hyper: (2*4 + 4) * 0.5 = 6; context sees only padding: bias 5
  // param: [6+5+1, 2*6-5+2, 3*6-3] * 16 = [192, 144, 240]
  std::vector<int8_t> y8{0};
  const PositionParams p = path.params_at(y8, 0, 0);
  CHECK(p.weight(0, 0) == 192);
  CHECK(p.mean(0, 0) == 144);
  CHECK(p.stddev(0, 0) == 240);

  // the float twin of the same model is exact here: within one 2^-6 step
  FloatGraph fg;
  fg.y_channels = 1;
  fg.z_channels = 1;
  fg.mix_k = 1;
  auto lift = [](const QuantLayer& l, float bias_scale) {
    FloatLayer f;
    f.desc = l.desc;
    f.weights = l.float_weights;
    f.bias.resize(l.bias.size());
    for (size_t i = 0; i < l.bias.size(); ++i)
      f.bias[i] = float(l.bias[i]) * bias_scale;
    return f;
  };
  fg.hyper.push_back(lift(m.hyper[0], 0.5f));    // s_w * s_in
  fg.context.push_back(lift(m.context[0], 1.f));
  fg.param.push_back(lift(m.param[0], 0.25f));
  FloatTensor zf{{1, 1, 1}, {4.f}};
  FloatEntropyPath fpath(fg, zf);
  FloatTensor yf{{1, 1, 1}, {0.f}};
  const FloatPositionParams fp = fpath.params_at(yf, 0, 0);
  CHECK(std::abs(fp.weight(0, 0) - float(p.weight(0, 0)) / 64.f) <= 1.f / 64.f);
  CHECK(std::abs(fp.mean(0, 0) - float(p.mean(0, 0)) / 64.f) <= 1.f / 64.f);
  CHECK(std::abs(fp.stddev(0, 0) - float(p.stddev(0, 0)) / 64.f) <= 1.f / 64.f);
}

TEST_CASE("out-of-bounds positions are rejected") {
  const Model model = make_toy_model(5);
  SymbolTensor z{{model.z_channels, 4, 4}, {}};
  z.data.assign(shape_volume(z.shape), 0);
  EntropyPath path(model, z);
  std::vector<int8_t> y8(size_t(model.y_channels) * 16, 0);
  CHECK_THROWS_AS(path.params_at(y8, 4, 0), ArgumentError);
  CHECK_THROWS_AS(path.params_at(y8, 0, 4), ArgumentError);
}

TEST_CASE("identical inputs give bit-identical parameters") {
  const Model model = make_toy_model(5);
  const FloatGraph g = make_toy_graph(5);
  auto [y, z] = make_symbol_pair(g, 321, 6, 6, 0.0);
  const std::vector<int8_t> y8 = clip_symbols_int8(y);
  EntropyPath a(model, z), b(model, z);
  for (uint32_t yy = 0; yy < 6; ++yy)
    for (uint32_t xx = 0; xx < 6; ++xx)
      CHECK(a.params_at(y8, xx, yy).vals == b.params_at(y8, xx, yy).vals);
}

TEST_CASE("zero context weights isolate the hyper branch") {
  FloatGraph g = make_toy_graph(9);
  for (float& w : g.context[0].weights) w = 0.f;
  const auto batch = make_calibration_batch(g, 99, 3, 6, 6);
  const Model model = quantize_graph(g, calibrate(g, batch));

  auto [y, z] = make_symbol_pair(g, 55, 6, 6, 0.0);
  std::vector<int8_t> y8 = clip_symbols_int8(y);
  EntropyPath path(model, z);
  const PositionParams before = path.params_at(y8, 3, 3);
  for (int8_t& v : y8) v = int8_t(v + 3);  // perturb every symbol
  const PositionParams after = path.params_at(y8, 3, 3);
  CHECK(before.vals == after.vals);
}

TEST_CASE("causality: future symbols never change present parameters") {
  const Model model = make_toy_model(13);
  const FloatGraph g = make_toy_graph(13);
  auto [y, z] = make_symbol_pair(g, 777, 6, 6, 0.0);
  std::vector<int8_t> y8 = clip_symbols_int8(y);
  EntropyPath path(model, z);

  std::mt19937_64 rng(71);
  const uint32_t w = 6;
  for (const auto [px, py] : {std::pair<uint32_t, uint32_t>{0, 0},
                              {3, 2},
                              {5, 5},
                              {2, 4}}) {
    const PositionParams before = path.params_at(y8, px, py);
    std::vector<int8_t> mutated = y8;
    const size_t raster = size_t(py) * w + px;
    for (uint32_t c = 0; c < model.y_channels; ++c)
      for (size_t pos = raster; pos < 36; ++pos)
        mutated[size_t(c) * 36 + pos] = int8_t(rng() % 200 - 100);
    const PositionParams after = path.params_at(mutated, px, py);
    CHECK(before.vals == after.vals);
  }
}

TEST_CASE("accumulator bound check rejects oversized layers") {
  // 8192 input channels of 5x5 full-scale weights overflow 32-bit worst case
  const uint32_t in_ch = 8192;
  QuantLayer l;
  l.desc.kind = LayerKind::Conv2d;
  l.desc.in_ch = in_ch;
  l.desc.out_ch = 1;
  l.desc.ksize = 5;
  l.weights.assign(size_t(in_ch) * 25, int8_t(127));
  l.float_weights.assign(l.weights.size(), 1.f);
  l.weight_scales = {0.5f};
  l.bias = {0};
  l.float_bias = {0.f};
  l.in_quant = unit_quant();
  l.out_quant = unit_quant();
  l.requant.push_back(derive_requant(0.5f, 1.f, 1.f, 0, 8));
  CHECK(accumulator_bound(l) > int64_t(INT32_MAX));
  CHECK_THROWS_AS(validate_quant_layer(l), DegenerateError);
}

TEST_CASE("float/int parameter drift stays under the stored baseline") {
  const uint64_t seed = 2024;
  const FloatGraph g = make_toy_graph(seed);
  const auto batch = make_calibration_batch(g, seed + 1000, 4, 8, 8);
  const Model model = quantize_graph(g, calibrate(g, batch));

  std::vector<float> diffs;
  for (uint64_t s = 0; s < 3; ++s) {
    auto [y, z] = make_symbol_pair(g, 5000 + s, 8, 8, 0.0);
    const std::vector<int8_t> y8 = clip_symbols_int8(y);
    FloatTensor yf{y.shape, {}};
    yf.data.assign(y.data.begin(), y.data.end());
    FloatTensor zf{z.shape, {}};
    zf.data.assign(z.data.begin(), z.data.end());
    EntropyPath ip(model, z);
    FloatEntropyPath fp(g, zf);
    for (uint32_t yy = 0; yy < 8; ++yy)
      for (uint32_t xx = 0; xx < 8; ++xx) {
        const PositionParams a = ip.params_at(y8, xx, yy);
        const FloatPositionParams b = fp.params_at(yf, xx, yy);
        for (size_t i = 0; i < a.vals.size(); ++i)
          diffs.push_back(std::abs(float(a.vals[i]) / 64.f - b.vals[i]));
      }
  }
  std::sort(diffs.begin(), diffs.end());
  const float p99 = diffs[size_t(double(diffs.size() - 1) * 0.99)];
  // stored baseline for this seeded model (measured 0.030); regressions in
  // the integer path show up as growth here
  CHECK(p99 <= 0.06f);
}
