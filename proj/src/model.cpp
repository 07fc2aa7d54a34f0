#include "dlic/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dlic/engine.hpp"
#include "dlic/quantize.hpp"

namespace dlic {

QuantizerSpec symbol_input_quantizer() {
  QuantizerSpec q;
  q.bits = 8;
  q.symmetric = true;
  q.granularity = Granularity::PerTensor;
  q.scales = {1.0f};
  q.zero_point = 0;
  return q;
}

namespace {

void validate_topology(uint32_t y_ch, uint32_t z_ch, uint32_t mix_k,
                       std::span<const LayerDesc> hyper,
                       std::span<const LayerDesc> context,
                       std::span<const LayerDesc> param) {
  if (y_ch == 0 || z_ch == 0) throw ShapeError("graph: zero channel count");
  if (mix_k < 1 || mix_k > uint32_t(kMaxMixture))
    throw ArgumentError("graph: mixture size out of range");
  if (hyper.empty() || context.empty() || param.empty())
    throw ShapeError("graph: every sub-network needs at least one layer");

  for (const LayerDesc& d : hyper) {
    d.validate();
    if (d.kind == LayerKind::MaskedConv2d)
      throw ShapeError("graph: masked conv outside the context model");
  }
  if (hyper.front().in_ch != z_ch) throw ShapeError("graph: hyper input channels");
  for (size_t i = 1; i < hyper.size(); ++i)
    if (hyper[i].in_ch != hyper[i - 1].out_ch)
      throw ShapeError("graph: hyper channel chain broken");

  for (const LayerDesc& d : context) d.validate();
  if (context.front().kind != LayerKind::MaskedConv2d)
    throw ShapeError("graph: context model must start with a masked conv");
  if (context.front().in_ch != y_ch) throw ShapeError("graph: context input channels");
  for (size_t i = 1; i < context.size(); ++i) {
    // only pointwise layers after the masked conv keep the field causal
    if (context[i].kind != LayerKind::Conv1x1)
      throw ShapeError("graph: context tail layers must be 1x1");
    if (context[i].in_ch != context[i - 1].out_ch)
      throw ShapeError("graph: context channel chain broken");
  }

  for (const LayerDesc& d : param) {
    d.validate();
    if (d.kind != LayerKind::Conv1x1)
      throw ShapeError("graph: parameter network layers must be 1x1");
  }
  if (param.front().in_ch != hyper.back().out_ch + context.back().out_ch)
    throw ShapeError("graph: parameter network input != hyper + context channels");
  for (size_t i = 1; i < param.size(); ++i)
    if (param[i].in_ch != param[i - 1].out_ch)
      throw ShapeError("graph: parameter channel chain broken");
  if (param.back().out_ch != 3 * mix_k * y_ch)
    throw ShapeError("graph: parameter network must emit 3*K*C channels");
  if (param.back().act != Activation::Identity)
    throw ShapeError("graph: final layer carries no activation");
}

template <typename L>
std::vector<LayerDesc> descs(const std::vector<L>& layers) {
  std::vector<LayerDesc> d;
  d.reserve(layers.size());
  for (const L& l : layers) d.push_back(l.desc);
  return d;
}

}  // namespace

void validate_float_graph(const FloatGraph& g) {
  validate_topology(g.y_channels, g.z_channels, g.mix_k, descs(g.hyper),
                    descs(g.context), descs(g.param));
  if (!(g.z_prior_sigma > 0.0))
    throw ArgumentError("graph: hyper prior width must be positive");
  auto check = [](const FloatLayer& l) {
    if (l.weights.size() != l.desc.weight_count())
      throw ShapeError("FloatLayer: weight count mismatch");
    if (l.bias.size() != l.desc.out_ch) throw ShapeError("FloatLayer: bias count mismatch");
  };
  for (const FloatLayer& l : g.hyper) check(l);
  for (const FloatLayer& l : g.context) check(l);
  for (const FloatLayer& l : g.param) check(l);
}

void validate_model(const Model& m) {
  validate_topology(m.y_channels, m.z_channels, m.mix_k, descs(m.hyper),
                    descs(m.context), descs(m.param));
  auto check_stage = [](std::span<const QuantLayer> layers, bool final_16) {
    for (size_t i = 0; i < layers.size(); ++i) {
      validate_quant_layer(layers[i]);
      const bool last = i + 1 == layers.size();
      const int want_bits = (final_16 && last) ? 16 : 8;
      if (layers[i].out_quant.bits != want_bits ||
          layers[i].requant[0].out_bits != want_bits)
        throw QuantizerError("model: unexpected stage output width");
    }
  };
  check_stage(m.hyper, false);
  check_stage(m.context, false);
  check_stage(m.param, true);

  const QuantizerSpec& fin = m.param.back().out_quant;
  if (!fin.symmetric || fin.zero_point != 0 || fin.scale() != kParamScale)
    throw QuantizerError("model: final layer must be symmetric 16-bit at step 2^-6");

  if (m.z_table.entries.size() != 2 * m.z_table.range + 2)
    throw ShapeError("model: hyper prior table length mismatch");
  if (m.z_table.entries.front() != 0 ||
      m.z_table.entries[2 * m.z_table.range] != m.z_table.cdf_max)
    throw FormatError("model: hyper prior table endpoints");
}

namespace {

QuantizerSpec activation_quantizer(float lo, float hi, int bits) {
  if (!(hi > lo)) throw DegenerateError("calibrate: constant activation range");
  const double levels = double((int64_t(1) << bits) - 1);
  const double s = (double(hi) - double(lo)) / levels;
  QuantizerSpec spec;
  spec.bits = bits;
  spec.symmetric = false;
  spec.granularity = Granularity::PerTensor;
  spec.scales = {float(s)};
  // min-max gives the zero point in the unsigned-domain convention; shift it
  // by 2^(B-1) so [min, max] fills the signed storage range
  spec.zero_point =
      int32_t(-round_away(double(lo) / s) - (int64_t(1) << (bits - 1)));
  return spec;
}

// Symmetric variant used after folded Leaky-ReLU layers: the fused negative
// branch scales the absorbed zero-point by the slope, so only a zero
// zero-point keeps both branches exact.
QuantizerSpec symmetric_activation_quantizer(float lo, float hi, int bits) {
  const float amax = std::max(std::abs(lo), std::abs(hi));
  if (!(amax > 0.f)) throw DegenerateError("calibrate: all-zero activation range");
  const double qmax = double((int64_t(1) << (bits - 1)) - 1);
  QuantizerSpec spec;
  spec.bits = bits;
  spec.symmetric = true;
  spec.granularity = Granularity::PerTensor;
  spec.scales = {float(double(amax) / qmax)};
  spec.zero_point = 0;
  return spec;
}

QuantizerSpec final_output_quantizer() {
  QuantizerSpec q;
  q.bits = 16;
  q.symmetric = true;
  q.granularity = Granularity::PerTensor;
  q.scales = {kParamScale};
  q.zero_point = 0;
  return q;
}

struct RangeAcc {
  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  void add(float a, float b) {
    lo = std::min(lo, a);
    hi = std::max(hi, b);
  }
};

std::vector<float> masked_weights(const FloatLayer& l) {
  std::vector<float> w = l.weights;
  if (l.desc.kind == LayerKind::MaskedConv2d) {
    const std::vector<uint8_t> mask = raster_mask(l.desc.ksize);
    const size_t taps = mask.size();
    for (size_t i = 0; i < w.size(); ++i)
      if (!mask[i % taps]) w[i] = 0.f;
  }
  return w;
}

}  // namespace

CalibrationReport calibrate(const FloatGraph& g, std::span<const CalibPair> batch) {
  validate_float_graph(g);
  if (batch.empty()) throw ArgumentError("calibrate: empty batch");

  CalibrationReport rep;
  auto searched_scales = [](const FloatLayer& l) {
    const std::vector<float> w = masked_weights(l);
    const size_t per_oc = w.size() / l.desc.out_ch;
    std::vector<float> scales(l.desc.out_ch);
    for (uint32_t oc = 0; oc < l.desc.out_ch; ++oc) {
      std::span<const float> filter(w.data() + size_t(oc) * per_oc, per_oc);
      const std::vector<float> grid = weight_scale_grid(filter, 8);
      scales[oc] = grid_search_weight_scale(filter, grid, 8);
    }
    return scales;
  };

  rep.hyper.resize(g.hyper.size());
  rep.context.resize(g.context.size());
  rep.param.resize(g.param.size());
  for (size_t i = 0; i < g.hyper.size(); ++i)
    rep.hyper[i].weight_scales = searched_scales(g.hyper[i]);
  for (size_t i = 0; i < g.context.size(); ++i)
    rep.context[i].weight_scales = searched_scales(g.context[i]);
  for (size_t i = 0; i < g.param.size(); ++i)
    rep.param[i].weight_scales = searched_scales(g.param[i]);

  std::vector<RangeAcc> hyper_r(g.hyper.size()), ctx_r(g.context.size()),
      param_r(g.param.size());
  RangeAcc feat_r;

  for (const CalibPair& pair : batch) {
    pair.y.validate();
    pair.z.validate();
    if (pair.y.shape.size() != 3 || pair.z.shape.size() != 3 ||
        pair.y.shape[0] != g.y_channels || pair.z.shape[0] != g.z_channels ||
        pair.y.shape[1] != pair.z.shape[1] || pair.y.shape[2] != pair.z.shape[2])
      throw ShapeError("calibrate: batch tensor shape mismatch");
    const PlaneDims zd{g.z_channels, pair.z.shape[1], pair.z.shape[2]};
    const PlaneDims yd{g.y_channels, pair.y.shape[1], pair.y.shape[2]};

    std::vector<std::pair<float, float>> hr;
    const std::vector<float> hyper_out =
        run_stage_float(g.hyper, pair.z.data, zd, &hr);
    for (size_t i = 0; i < hr.size(); ++i) hyper_r[i].add(hr[i].first, hr[i].second);

    std::vector<std::pair<float, float>> cr;
    const std::vector<float> ctx_out =
        run_stage_float(g.context, pair.y.data, yd, &cr);
    for (size_t i = 0; i < cr.size(); ++i) ctx_r[i].add(cr[i].first, cr[i].second);

    feat_r.add(hr.back().first, hr.back().second);
    feat_r.add(cr.back().first, cr.back().second);

    // concatenated features through the parameter network
    std::vector<float> feat(hyper_out.size() + ctx_out.size());
    std::copy(hyper_out.begin(), hyper_out.end(), feat.begin());
    std::copy(ctx_out.begin(), ctx_out.end(), feat.begin() + hyper_out.size());
    std::vector<std::pair<float, float>> pr;
    const PlaneDims fd{g.param.front().desc.in_ch, zd.h, zd.w};
    run_stage_float(g.param, feat, fd, &pr);
    for (size_t i = 0; i < pr.size(); ++i) param_r[i].add(pr[i].first, pr[i].second);
  }

  for (size_t i = 0; i < g.hyper.size(); ++i) {
    rep.hyper[i].out_min = hyper_r[i].lo;
    rep.hyper[i].out_max = hyper_r[i].hi;
  }
  for (size_t i = 0; i < g.context.size(); ++i) {
    rep.context[i].out_min = ctx_r[i].lo;
    rep.context[i].out_max = ctx_r[i].hi;
  }
  for (size_t i = 0; i < g.param.size(); ++i) {
    rep.param[i].out_min = param_r[i].lo;
    rep.param[i].out_max = param_r[i].hi;
  }
  rep.feature_min = feat_r.lo;
  rep.feature_max = feat_r.hi;
  return rep;
}

namespace {

QuantLayer quantize_layer(const FloatLayer& fl, const std::vector<float>& w_scales,
                          const QuantizerSpec& in_q, const QuantizerSpec& out_q) {
  QuantLayer q;
  q.desc = fl.desc;
  q.float_weights = masked_weights(fl);
  q.float_bias = fl.bias;
  q.weight_scales = w_scales;
  q.in_quant = in_q;
  q.out_quant = out_q;

  const size_t per_oc = q.float_weights.size() / fl.desc.out_ch;
  q.weights.resize(q.float_weights.size());
  q.bias.resize(fl.desc.out_ch);
  q.requant.reserve(fl.desc.out_ch);

  for (uint32_t oc = 0; oc < fl.desc.out_ch; ++oc) {
    const double s_w = w_scales[oc];
    int64_t wsum = 0;
    for (size_t i = 0; i < per_oc; ++i) {
      const size_t idx = size_t(oc) * per_oc + i;
      const int64_t v = std::clamp<int64_t>(
          round_away(double(q.float_weights[idx]) / s_w), -128, 127);
      q.weights[idx] = int8_t(v);
      wsum += v;
    }
    // absorbed bias: the real bias in accumulator units plus the input
    // zero-point correction
    const double s_in = in_q.scale();
    const int64_t b =
        round_away(double(fl.bias[oc]) / (s_w * s_in)) - int64_t(in_q.zero_point) * wsum;
    if (b < INT32_MIN || b > INT32_MAX)
      throw DegenerateError("quantize_graph: absorbed bias exceeds 32 bits");
    q.bias[oc] = int32_t(b);

    std::optional<float> slope;
    if (fl.desc.act == Activation::LeakyRelu) slope = fl.desc.leaky_slope;
    q.requant.push_back(derive_requant(float(s_w), in_q.scale(), out_q.scale(),
                                       out_q.zero_point, out_q.bits, slope));
  }
  return q;
}

FactorizedTable build_z_table(double sigma) {
  FactorizedTable t;
  t.range = 32;
  t.cdf_max = 4096;
  LutConfig cfg;
  cfg.range = t.range;
  cfg.cdf_max = t.cdf_max;
  t.entries = build_cdf_table(sigma, 0.0, cfg);
  return t;
}

}  // namespace

Model quantize_graph(const FloatGraph& g, const CalibrationReport& report) {
  validate_float_graph(g);
  if (report.hyper.size() != g.hyper.size() ||
      report.context.size() != g.context.size() ||
      report.param.size() != g.param.size())
    throw ArgumentError("quantize_graph: report does not match graph");

  Model m;
  m.y_channels = g.y_channels;
  m.z_channels = g.z_channels;
  m.mix_k = g.mix_k;

  const QuantizerSpec sym_in = symbol_input_quantizer();
  auto out_quant_for = [](const LayerDesc& d, float lo, float hi) {
    return d.act == Activation::LeakyRelu ? symmetric_activation_quantizer(lo, hi, 8)
                                          : activation_quantizer(lo, hi, 8);
  };
  const bool feat_leaky = g.hyper.back().desc.act == Activation::LeakyRelu ||
                          g.context.back().desc.act == Activation::LeakyRelu;
  const QuantizerSpec feat_q =
      feat_leaky
          ? symmetric_activation_quantizer(report.feature_min, report.feature_max, 8)
          : activation_quantizer(report.feature_min, report.feature_max, 8);

  auto stage_quants = [&](const std::vector<FloatLayer>& layers,
                          const std::vector<CalibrationReport::LayerCal>& cal,
                          const QuantizerSpec& first_in,
                          const QuantizerSpec& last_out) {
    std::vector<QuantLayer> out;
    QuantizerSpec in_q = first_in;
    for (size_t i = 0; i < layers.size(); ++i) {
      const QuantizerSpec out_q =
          i + 1 == layers.size()
              ? last_out
              : out_quant_for(layers[i].desc, cal[i].out_min, cal[i].out_max);
      out.push_back(quantize_layer(layers[i], cal[i].weight_scales, in_q, out_q));
      in_q = out_q;
    }
    return out;
  };

  m.hyper = stage_quants(g.hyper, report.hyper, sym_in, feat_q);
  m.context = stage_quants(g.context, report.context, sym_in, feat_q);
  m.param = stage_quants(g.param, report.param, feat_q, final_output_quantizer());

  m.z_table = build_z_table(g.z_prior_sigma);
  validate_model(m);
  return m;
}

}  // namespace dlic
