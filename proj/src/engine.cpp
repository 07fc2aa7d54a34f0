#include "dlic/engine.hpp"

#include <algorithm>
#include <cmath>

namespace dlic {

void LayerDesc::validate() const {
  if (in_ch == 0 || out_ch == 0) throw ShapeError("LayerDesc: zero channel count");
  if (ksize == 0 || ksize % 2 == 0 || ksize > 7)
    throw ShapeError("LayerDesc: kernel must be odd and small");
  if (kind == LayerKind::Conv1x1 && ksize != 1)
    throw ShapeError("LayerDesc: conv1x1 requires kernel 1");
  if (kind == LayerKind::MaskedConv2d && ksize < 3)
    throw ShapeError("LayerDesc: masked conv requires kernel >= 3");
  if (act == Activation::LeakyRelu && !(leaky_slope > 0.f && leaky_slope < 1.f))
    throw ArgumentError("LayerDesc: leaky slope must lie in (0, 1)");
}

std::vector<uint8_t> raster_mask(uint32_t ksize) {
  const uint32_t c = ksize / 2;
  std::vector<uint8_t> m(size_t(ksize) * ksize, 0);
  for (uint32_t ky = 0; ky < ksize; ++ky)
    for (uint32_t kx = 0; kx < ksize; ++kx)
      m[size_t(ky) * ksize + kx] = (ky < c || (ky == c && kx < c)) ? 1 : 0;
  return m;
}

int64_t accumulator_bound(const QuantLayer& layer) {
  const size_t per_oc = size_t(layer.desc.in_ch) * layer.desc.ksize * layer.desc.ksize;
  int64_t worst = 0;
  for (uint32_t oc = 0; oc < layer.desc.out_ch; ++oc) {
    int64_t sum = std::abs(int64_t(layer.bias[oc]));
    for (size_t i = 0; i < per_oc; ++i)
      sum += int64_t(std::abs(int(layer.weights[size_t(oc) * per_oc + i]))) * 128;
    worst = std::max(worst, sum);
  }
  return worst;
}

void validate_quant_layer(const QuantLayer& layer) {
  layer.desc.validate();
  if (layer.weights.size() != layer.desc.weight_count())
    throw ShapeError("QuantLayer: weight count mismatch");
  if (layer.bias.size() != layer.desc.out_ch)
    throw ShapeError("QuantLayer: bias count mismatch");
  if (layer.requant.size() != layer.desc.out_ch)
    throw ShapeError("QuantLayer: requant count mismatch");
  if (layer.weight_scales.size() != layer.desc.out_ch)
    throw ShapeError("QuantLayer: weight scale count mismatch");
  layer.in_quant.validate();
  layer.out_quant.validate();
  if (layer.in_quant.bits != 8)
    throw QuantizerError("QuantLayer: inputs must be 8-bit");
  for (const RequantParams& r : layer.requant) {
    if (r.shift != 32 - r.out_bits) throw QuantizerError("QuantLayer: bad requant shift");
    if (layer.desc.act == Activation::LeakyRelu && !r.neg_mul)
      throw ContractError("QuantLayer: leaky layer without negative branch");
    // overflow freedom at the clip corners
    if (int64_t(r.mul) * r.clip_hi > INT32_MAX || int64_t(r.mul) * r.clip_lo < INT32_MIN)
      throw QuantizerError("QuantLayer: requant bounds overflow");
  }
  if (layer.desc.kind == LayerKind::MaskedConv2d) {
    const std::vector<uint8_t> mask = raster_mask(layer.desc.ksize);
    const size_t taps = size_t(layer.desc.ksize) * layer.desc.ksize;
    const size_t per_oc = size_t(layer.desc.in_ch) * taps;
    for (uint32_t oc = 0; oc < layer.desc.out_ch; ++oc)
      for (uint32_t ic = 0; ic < layer.desc.in_ch; ++ic)
        for (size_t t = 0; t < taps; ++t)
          if (!mask[t] &&
              layer.weights[size_t(oc) * per_oc + size_t(ic) * taps + t] != 0)
            throw ShapeError("QuantLayer: masked tap carries nonzero weight");
  }
  if (accumulator_bound(layer) > INT32_MAX)
    throw DegenerateError("QuantLayer: accumulator bound exceeds 32 bits");
}

namespace {

inline int8_t pad_value(const QuantizerSpec& q) {
  return int8_t(std::clamp<int32_t>(q.zero_point, -128, 127));
}

}  // namespace

void conv_at_int(std::span<const int8_t> in, PlaneDims in_dims,
                 const QuantLayer& layer, uint32_t x, uint32_t y,
                 std::span<int32_t> out) {
  const LayerDesc& d = layer.desc;
  if (in_dims.ch != d.in_ch) throw ShapeError("conv_at_int: channel mismatch");
  if (out.size() != d.out_ch) throw ShapeError("conv_at_int: output size mismatch");
  const int k = int(d.ksize);
  const int p = int(d.pad());
  const int h = int(in_dims.h), w = int(in_dims.w);
  const int8_t pad = pad_value(layer.in_quant);
  const size_t taps = size_t(k) * k;
  const size_t per_oc = size_t(d.in_ch) * taps;

  for (uint32_t oc = 0; oc < d.out_ch; ++oc) {
    int32_t acc = layer.bias[oc];
    const int8_t* wrow = layer.weights.data() + size_t(oc) * per_oc;
    for (uint32_t ic = 0; ic < d.in_ch; ++ic) {
      const int8_t* plane = in.data() + size_t(ic) * h * w;
      const int8_t* wk = wrow + size_t(ic) * taps;
      for (int ky = 0; ky < k; ++ky) {
        const int yy = int(y) + ky - p;
        for (int kx = 0; kx < k; ++kx) {
          const int xx = int(x) + kx - p;
          const int8_t s = (yy < 0 || yy >= h || xx < 0 || xx >= w)
                               ? pad
                               : plane[size_t(yy) * w + xx];
          acc += int32_t(wk[size_t(ky) * k + kx]) * s;
        }
      }
    }
    out[oc] = acc;
  }
}

void conv_forward_int(std::span<const int8_t> in, PlaneDims in_dims,
                      const QuantLayer& layer, std::span<int32_t> out) {
  const LayerDesc& d = layer.desc;
  if (out.size() != size_t(d.out_ch) * in_dims.h * in_dims.w)
    throw ShapeError("conv_forward_int: output size mismatch");
  std::vector<int32_t> acc(d.out_ch);
  const size_t hw = size_t(in_dims.h) * in_dims.w;
  for (uint32_t y = 0; y < in_dims.h; ++y)
    for (uint32_t x = 0; x < in_dims.w; ++x) {
      conv_at_int(in, in_dims, layer, x, y, acc);
      for (uint32_t oc = 0; oc < d.out_ch; ++oc)
        out[size_t(oc) * hw + size_t(y) * in_dims.w + x] = acc[oc];
    }
}

void activate_requantize(std::span<const int32_t> acc, const QuantLayer& layer,
                         uint32_t per_channel, std::span<int32_t> out) {
  if (acc.size() != out.size() ||
      acc.size() != size_t(layer.desc.out_ch) * per_channel)
    throw ShapeError("activate_requantize: size mismatch");
  for (uint32_t oc = 0; oc < layer.desc.out_ch; ++oc) {
    const RequantParams& rp = layer.requant[oc];
    const int32_t* src = acc.data() + size_t(oc) * per_channel;
    int32_t* dst = out.data() + size_t(oc) * per_channel;
    switch (layer.desc.act) {
      case Activation::Identity:
        for (uint32_t i = 0; i < per_channel; ++i) dst[i] = requantize_one(src[i], rp);
        break;
      case Activation::Relu:
        for (uint32_t i = 0; i < per_channel; ++i)
          dst[i] = requantize_one(std::max(src[i], 0), rp);
        break;
      case Activation::LeakyRelu:
        if (!rp.neg_mul) throw ContractError("activate_requantize: negative branch missing");
        for (uint32_t i = 0; i < per_channel; ++i)
          dst[i] = requantize_leaky_one(src[i], rp);
        break;
    }
  }
}

std::vector<int8_t> run_stage_int(std::span<const QuantLayer> layers,
                                  std::span<const int8_t> input, PlaneDims dims) {
  std::vector<int8_t> cur(input.begin(), input.end());
  PlaneDims d = dims;
  for (const QuantLayer& layer : layers) {
    if (layer.requant[0].out_bits != 8)
      throw ContractError("run_stage_int: stage must stay 8-bit");
    const size_t hw = size_t(d.h) * d.w;
    std::vector<int32_t> acc(size_t(layer.desc.out_ch) * hw);
    conv_forward_int(cur, d, layer, acc);
    std::vector<int32_t> req(acc.size());
    activate_requantize(acc, layer, uint32_t(hw), req);
    cur.resize(req.size());
    for (size_t i = 0; i < req.size(); ++i) cur[i] = int8_t(req[i]);
    d.ch = layer.desc.out_ch;
  }
  return cur;
}

std::vector<int8_t> clip_symbols_int8(const SymbolTensor& t) {
  std::vector<int8_t> out(t.data.size());
  for (size_t i = 0; i < t.data.size(); ++i)
    out[i] = int8_t(std::clamp<int32_t>(t.data[i], -128, 127));
  return out;
}

EntropyPath::EntropyPath(const Model& model, const SymbolTensor& z) : model_(model) {
  z.validate();
  if (z.shape.size() != 3 || z.shape[0] != model.z_channels)
    throw ShapeError("EntropyPath: hyper-latent shape mismatch");
  const PlaneDims z_dims{model.z_channels, z.shape[1], z.shape[2]};
  y_dims_ = PlaneDims{model.y_channels, z.shape[1], z.shape[2]};

  const std::vector<int8_t> z8 = clip_symbols_int8(z);
  hyper_feats_ = run_stage_int(model.hyper, z8, z_dims);
  feat_dims_ = PlaneDims{model.hyper.back().desc.out_ch, z_dims.h, z_dims.w};
}

PositionParams EntropyPath::params_at(std::span<const int8_t> y_visible,
                                      uint32_t x, uint32_t y) const {
  if (y_visible.size() != y_dims_.volume())
    throw ShapeError("EntropyPath: visible plane size mismatch");
  if (x >= y_dims_.w || y >= y_dims_.h)
    throw ArgumentError("EntropyPath: position out of bounds");

  // Context features at this position only; the raster mask keeps the
  // receptive field strictly in the past.
  std::vector<int32_t> vec32;
  std::vector<int8_t> vec8;
  {
    const QuantLayer& ctx0 = model_.context[0];
    std::vector<int32_t> acc(ctx0.desc.out_ch);
    conv_at_int(y_visible, y_dims_, ctx0, x, y, acc);
    vec32.resize(acc.size());
    activate_requantize(acc, ctx0, 1, vec32);
    for (size_t i = 1; i < model_.context.size(); ++i) {
      const QuantLayer& l = model_.context[i];
      vec8.resize(vec32.size());
      for (size_t j = 0; j < vec32.size(); ++j) vec8[j] = int8_t(vec32[j]);
      std::vector<int32_t> a(l.desc.out_ch);
      conv_at_int(vec8, PlaneDims{l.desc.in_ch, 1, 1}, l, 0, 0, a);
      vec32.resize(a.size());
      activate_requantize(a, l, 1, vec32);
    }
  }

  // Parameter-network input: hyper features then context features.
  const size_t hw = size_t(feat_dims_.h) * feat_dims_.w;
  const size_t pos = size_t(y) * feat_dims_.w + x;
  std::vector<int8_t> param_in(feat_dims_.ch + vec32.size());
  for (uint32_t c = 0; c < feat_dims_.ch; ++c)
    param_in[c] = hyper_feats_[size_t(c) * hw + pos];
  for (size_t c = 0; c < vec32.size(); ++c)
    param_in[feat_dims_.ch + c] = int8_t(vec32[c]);

  std::vector<int32_t> cur;
  for (size_t i = 0; i < model_.param.size(); ++i) {
    const QuantLayer& l = model_.param[i];
    std::vector<int32_t> acc(l.desc.out_ch);
    conv_at_int(param_in, PlaneDims{l.desc.in_ch, 1, 1}, l, 0, 0, acc);
    cur.resize(acc.size());
    activate_requantize(acc, l, 1, cur);
    if (i + 1 < model_.param.size()) {
      param_in.resize(cur.size());
      for (size_t j = 0; j < cur.size(); ++j) param_in[j] = int8_t(cur[j]);
    }
  }

  PositionParams p;
  p.channels = model_.y_channels;
  p.mix_k = model_.mix_k;
  p.vals.resize(cur.size());
  for (size_t i = 0; i < cur.size(); ++i) p.vals[i] = int16_t(cur[i]);
  return p;
}

// ---------------------------------------------------------------------------
// Float reference path

namespace {

inline float apply_act_float(float v, const LayerDesc& d) {
  switch (d.act) {
    case Activation::Identity: return v;
    case Activation::Relu: return v > 0.f ? v : 0.f;
    case Activation::LeakyRelu: return v >= 0.f ? v : d.leaky_slope * v;
  }
  return v;
}

void conv_at_float(std::span<const float> in, PlaneDims in_dims,
                   const FloatLayer& layer, uint32_t x, uint32_t y,
                   std::span<float> out) {
  const LayerDesc& d = layer.desc;
  const int k = int(d.ksize), p = int(d.pad());
  const int h = int(in_dims.h), w = int(in_dims.w);
  const size_t taps = size_t(k) * k;
  const size_t per_oc = size_t(d.in_ch) * taps;
  for (uint32_t oc = 0; oc < d.out_ch; ++oc) {
    float acc = layer.bias[oc];
    const float* wrow = layer.weights.data() + size_t(oc) * per_oc;
    for (uint32_t ic = 0; ic < d.in_ch; ++ic) {
      const float* plane = in.data() + size_t(ic) * h * w;
      const float* wk = wrow + size_t(ic) * taps;
      for (int ky = 0; ky < k; ++ky) {
        const int yy = int(y) + ky - p;
        for (int kx = 0; kx < k; ++kx) {
          const int xx = int(x) + kx - p;
          const float s = (yy < 0 || yy >= h || xx < 0 || xx >= w)
                              ? 0.f
                              : plane[size_t(yy) * w + xx];
          acc += wk[size_t(ky) * k + kx] * s;
        }
      }
    }
    out[oc] = acc;
  }
}

}  // namespace

void conv_forward_float(std::span<const float> in, PlaneDims in_dims,
                        const FloatLayer& layer, std::span<float> out) {
  const size_t hw = size_t(in_dims.h) * in_dims.w;
  if (out.size() != size_t(layer.desc.out_ch) * hw)
    throw ShapeError("conv_forward_float: output size mismatch");
  std::vector<float> acc(layer.desc.out_ch);
  for (uint32_t y = 0; y < in_dims.h; ++y)
    for (uint32_t x = 0; x < in_dims.w; ++x) {
      conv_at_float(in, in_dims, layer, x, y, acc);
      for (uint32_t oc = 0; oc < layer.desc.out_ch; ++oc)
        out[size_t(oc) * hw + size_t(y) * in_dims.w + x] = acc[oc];
    }
}

std::vector<float> run_stage_float(std::span<const FloatLayer> layers,
                                   std::span<const float> input, PlaneDims dims,
                                   std::vector<std::pair<float, float>>* ranges) {
  std::vector<float> cur(input.begin(), input.end());
  PlaneDims d = dims;
  for (const FloatLayer& layer : layers) {
    const size_t hw = size_t(d.h) * d.w;
    std::vector<float> acc(size_t(layer.desc.out_ch) * hw);
    conv_forward_float(cur, d, layer, acc);
    for (float& v : acc) v = apply_act_float(v, layer.desc);
    if (ranges) {
      float lo = acc[0], hi = acc[0];
      for (float v : acc) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      ranges->emplace_back(lo, hi);
    }
    cur = std::move(acc);
    d.ch = layer.desc.out_ch;
  }
  return cur;
}

FloatEntropyPath::FloatEntropyPath(const FloatGraph& graph, const FloatTensor& z)
    : graph_(graph) {
  z.validate();
  if (z.shape.size() != 3 || z.shape[0] != graph.z_channels)
    throw ShapeError("FloatEntropyPath: hyper-latent shape mismatch");
  const PlaneDims z_dims{graph.z_channels, z.shape[1], z.shape[2]};
  y_dims_ = PlaneDims{graph.y_channels, z.shape[1], z.shape[2]};
  hyper_feats_ = run_stage_float(graph.hyper, z.data, z_dims, nullptr);
  feat_dims_ = PlaneDims{graph.hyper.back().desc.out_ch, z_dims.h, z_dims.w};
}

FloatPositionParams FloatEntropyPath::params_at(const FloatTensor& y_visible,
                                                uint32_t x, uint32_t y) const {
  if (y_visible.data.size() != y_dims_.volume())
    throw ShapeError("FloatEntropyPath: visible plane size mismatch");

  std::vector<float> ctx(graph_.context[0].desc.out_ch);
  conv_at_float(y_visible.data, y_dims_, graph_.context[0], x, y, ctx);
  for (float& v : ctx) v = apply_act_float(v, graph_.context[0].desc);
  for (size_t i = 1; i < graph_.context.size(); ++i) {
    const FloatLayer& l = graph_.context[i];
    std::vector<float> nxt(l.desc.out_ch);
    conv_at_float(ctx, PlaneDims{l.desc.in_ch, 1, 1}, l, 0, 0, nxt);
    for (float& v : nxt) v = apply_act_float(v, l.desc);
    ctx = std::move(nxt);
  }

  const size_t hw = size_t(feat_dims_.h) * feat_dims_.w;
  const size_t pos = size_t(y) * feat_dims_.w + x;
  std::vector<float> cur(feat_dims_.ch + ctx.size());
  for (uint32_t c = 0; c < feat_dims_.ch; ++c)
    cur[c] = hyper_feats_[size_t(c) * hw + pos];
  for (size_t c = 0; c < ctx.size(); ++c) cur[feat_dims_.ch + c] = ctx[c];

  for (const FloatLayer& l : graph_.param) {
    std::vector<float> nxt(l.desc.out_ch);
    conv_at_float(cur, PlaneDims{l.desc.in_ch, 1, 1}, l, 0, 0, nxt);
    for (float& v : nxt) v = apply_act_float(v, l.desc);
    cur = std::move(nxt);
  }

  FloatPositionParams p;
  p.channels = graph_.y_channels;
  p.mix_k = graph_.mix_k;
  p.vals = std::move(cur);
  return p;
}

}  // namespace dlic
