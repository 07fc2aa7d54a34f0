#include "dlic/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace dlic {

uint32_t ResolvedGmm::cum(int64_t y) const {
  const int64_t r = int64_t(range);
  uint32_t acc = 0;
  for (int k = 0; k < count; ++k) {
    const Comp& c = comp[size_t(k)];
    const int64_t p = y - c.mean_floor;
    uint32_t ck;
    if (p >= r)
      ck = cdf_max;
    else if (p <= -r)
      ck = 0;
    else
      ck = c.table[size_t(p + r)];
    acc += c.weight * ck;
  }
  return acc;
}

uint32_t ResolvedGmm::total() const {
  uint32_t acc = 0;
  for (int k = 0; k < count; ++k) acc += comp[size_t(k)].weight * cdf_max;
  return acc;
}

int32_t ResolvedGmm::floor_min() const {
  int32_t m = comp[0].mean_floor;
  for (int k = 1; k < count; ++k) m = std::min(m, comp[size_t(k)].mean_floor);
  return m;
}

int32_t ResolvedGmm::floor_max() const {
  int32_t m = comp[0].mean_floor;
  for (int k = 1; k < count; ++k) m = std::max(m, comp[size_t(k)].mean_floor);
  return m;
}

uint32_t ResolvedGmm::escape_bound() const {
  // Cumulate of the lowest in-range symbol. Every normally coded symbol has a
  // cumulate at or above this, so [0, bound) is free for the placeholder; the
  // max(1) fallback only matters when the low component carries zero weight.
  const uint32_t b = cum(int64_t(floor_min()) - int64_t(range) + 1);
  return std::max<uint32_t>(b, 1);
}

ResolvedGmm resolve_query(const GmmQuery& q, const LutSet& luts) {
  q.validate();
  ResolvedGmm g;
  g.count = q.count;
  g.range = luts.config.range;
  g.cdf_max = luts.config.cdf_max;
  for (int k = 0; k < q.count; ++k) {
    g.comp[size_t(k)].table = luts.table(q.comp[size_t(k)].outer);
    g.comp[size_t(k)].mean_floor = q.comp[size_t(k)].mean_floor;
    g.comp[size_t(k)].weight = q.comp[size_t(k)].weight;
  }
  return g;
}

ResolvedGmm resolve_single_table(const uint16_t* table, uint32_t range,
                                 uint32_t cdf_max) {
  ResolvedGmm g;
  g.count = 1;
  g.range = range;
  g.cdf_max = cdf_max;
  g.comp[0] = {table, 0, 1};
  return g;
}

GmmQuery query_for_channel(const PositionParams& p, uint32_t channel) {
  if (channel >= p.channels) throw ArgumentError("query_for_channel: bad channel");
  GmmQuery q;
  q.count = int(p.mix_k);
  uint32_t weight_sum = 0;
  for (uint32_t k = 0; k < p.mix_k; ++k) {
    GmmComponent& c = q.comp[k];
    const int32_t raw_w = p.weight(channel, k);
    c.weight = uint32_t(std::clamp<int32_t>(raw_w, 0, int32_t(kWeightCap)));
    weight_sum += c.weight;
    const MeanIndex mi = mean_split(p.mean(channel, k));
    c.mean_floor = mi.floor_mean;
    const int sigma = sigma_bin(p.stddev(channel, k)).combined();
    c.outer = uint32_t(mi.frac_index) * kSigmaLevels + uint32_t(sigma);
  }
  if (weight_sum == 0)
    for (int k = 0; k < q.count; ++k) q.comp[size_t(k)].weight = 1;
  return q;
}

void gmm_encode_symbol(RangeEncoder& enc, BitWriter& escape,
                       const ResolvedGmm& g, int32_t symbol) {
  const uint32_t total = g.total();
  const uint32_t c_lo = g.cum(symbol);
  const uint32_t c_hi = g.cum(int64_t(symbol) + 1);
  // Saturated or empty intervals cannot be coded directly: out-of-range
  // symbols and symbols falling in a gap between distant mixture components
  // go through the escape path.
  if (c_lo == 0 || c_lo == total || c_hi == c_lo) {
    golomb_encode(escape, symbol);
    enc.encode(0, g.escape_bound(), total);
    return;
  }
  enc.encode(c_lo, c_hi, total);
}

int32_t gmm_decode_symbol(RangeDecoder& dec, BitReader& escape,
                          const ResolvedGmm& g) {
  const uint32_t total = g.total();
  const uint32_t bound = g.escape_bound();
  const uint32_t target = dec.decode_target(total);
  if (target < bound) {
    dec.decode_update(0, bound, total);
    return golomb_decode(escape);
  }
  // Largest y with cum(y) <= target; cum(lo) = 0 and cum(hi) = total bracket
  // every target.
  int64_t lo = int64_t(g.floor_min()) - int64_t(g.range);
  int64_t hi = int64_t(g.floor_max()) + int64_t(g.range);
  while (hi - lo > 1) {
    const int64_t mid = lo + (hi - lo) / 2;
    if (g.cum(mid) <= target)
      lo = mid;
    else
      hi = mid;
  }
  const uint32_t c_lo = g.cum(lo);
  const uint32_t c_hi = g.cum(lo + 1);
  if (c_lo > target || c_hi <= target)
    throw CorruptionError("gmm_decode_symbol: no interval brackets the target");
  dec.decode_update(c_lo, c_hi, total);
  return int32_t(lo);
}

void accumulate_rate(RateStats& stats, const ResolvedGmm& g, int32_t symbol) {
  const uint32_t total = g.total();
  const uint32_t c_lo = g.cum(symbol);
  const uint32_t c_hi = g.cum(int64_t(symbol) + 1);
  stats.symbols += 1;
  if (c_lo == 0 || c_lo == total || c_hi == c_lo) {
    stats.escapes += 1;
    stats.ideal_bits -= std::log2(double(g.escape_bound()) / total);
    // escape payload bits: order-0 exp-Golomb length of the zigzagged value
    const int64_t v = symbol;
    const uint64_t u = v >= 0 ? uint64_t(v) * 2 : uint64_t(-v) * 2 - 1;
    const int width = std::bit_width(u + 1);
    stats.ideal_bits += double(2 * width - 1);
    return;
  }
  stats.ideal_bits -= std::log2(double(c_hi - c_lo) / total);
}

namespace {

ResolvedGmm z_prior_gmm(const Model& model) {
  return resolve_single_table(model.z_table.entries.data(), model.z_table.range,
                              model.z_table.cdf_max);
}

void check_pair_shapes(const Model& model, const Shape& y_shape, const Shape& z_shape) {
  if (y_shape.size() != 3 || z_shape.size() != 3)
    throw ShapeError("codec: tensors must be CHW");
  if (y_shape[0] != model.y_channels || z_shape[0] != model.z_channels)
    throw ShapeError("codec: channel counts do not match the model");
  if (y_shape[1] != z_shape[1] || y_shape[2] != z_shape[2])
    throw ShapeError("codec: latent and hyper-latent spatial dims differ");
}

}  // namespace

EncodedStreams encode_tensor(const Model& model, const LutSet& luts,
                             const SymbolTensor& y, const SymbolTensor& z) {
  y.validate();
  z.validate();
  check_pair_shapes(model, y.shape, z.shape);

  EncodedStreams out;
  BitWriter escape;

  {
    RangeEncoder enc;
    const ResolvedGmm zg = z_prior_gmm(model);
    for (int32_t v : z.data) gmm_encode_symbol(enc, escape, zg, v);
    out.hyper = enc.finish();
  }

  {
    RangeEncoder enc;
    EntropyPath path(model, z);
    const std::vector<int8_t> y8 = clip_symbols_int8(y);
    const uint32_t h = y.shape[1], w = y.shape[2];
    const size_t hw = size_t(h) * w;
    for (uint32_t yy = 0; yy < h; ++yy)
      for (uint32_t xx = 0; xx < w; ++xx) {
        const PositionParams params = path.params_at(y8, xx, yy);
        for (uint32_t c = 0; c < model.y_channels; ++c) {
          const ResolvedGmm g = resolve_query(query_for_channel(params, c), luts);
          gmm_encode_symbol(enc, escape, g,
                            y.data[size_t(c) * hw + size_t(yy) * w + xx]);
        }
      }
    out.main = enc.finish();
  }

  out.escape = escape.bytes();
  out.escape_bits = escape.bit_count();
  return out;
}

std::pair<SymbolTensor, SymbolTensor> decode_tensor(const Model& model,
                                                    const LutSet& luts,
                                                    const EncodedStreams& streams,
                                                    const Shape& y_shape,
                                                    const Shape& z_shape) {
  check_pair_shapes(model, y_shape, z_shape);

  BitReader escape(streams.escape, streams.escape_bits);

  SymbolTensor z;
  z.shape = z_shape;
  z.data.resize(shape_volume(z_shape));
  {
    RangeDecoder dec(streams.hyper);
    const ResolvedGmm zg = z_prior_gmm(model);
    for (int32_t& v : z.data) v = gmm_decode_symbol(dec, escape, zg);
  }

  SymbolTensor y;
  y.shape = y_shape;
  y.data.resize(shape_volume(y_shape));
  {
    RangeDecoder dec(streams.main);
    EntropyPath path(model, z);
    const uint32_t h = y_shape[1], w = y_shape[2];
    const size_t hw = size_t(h) * w;
    std::vector<int8_t> y8(y.data.size(), 0);
    for (uint32_t yy = 0; yy < h; ++yy)
      for (uint32_t xx = 0; xx < w; ++xx) {
        const PositionParams params = path.params_at(y8, xx, yy);
        for (uint32_t c = 0; c < model.y_channels; ++c) {
          const ResolvedGmm g = resolve_query(query_for_channel(params, c), luts);
          const int32_t v = gmm_decode_symbol(dec, escape, g);
          const size_t idx = size_t(c) * hw + size_t(yy) * w + xx;
          y.data[idx] = v;
          y8[idx] = int8_t(std::clamp<int32_t>(v, -128, 127));
        }
      }
  }
  return {std::move(y), std::move(z)};
}

}  // namespace dlic
