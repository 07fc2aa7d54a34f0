#include "dlic/io.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace dlic {

namespace fs = std::filesystem;
using json = nlohmann::json;

uint32_t crc32(std::span<const uint8_t> bytes) {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = 0xFFFFFFFFu;
  for (uint8_t b : bytes) c = table[(c ^ b) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

uint64_t fnv1a64(std::span<const uint8_t> bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open file for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!f) throw FormatError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// little-endian byte stream helpers

namespace {

struct Writer {
  std::vector<uint8_t> out;

  void u8(uint8_t v) { out.push_back(v); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(uint8_t(v >> (8 * i)));
  }
  void i32(int32_t v) { u32(uint32_t(v)); }
  void bytes(std::span<const uint8_t> b) { out.insert(out.end(), b.begin(), b.end()); }
  void magic(const char* m) { out.insert(out.end(), m, m + 4); }
};

struct Reader {
  std::span<const uint8_t> in;
  size_t pos = 0;

  void need(size_t n) const {
    if (n > in.size() - pos) throw CorruptionError("file truncated");
  }
  uint8_t u8() {
    need(1);
    return in[pos++];
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(in[pos++]) << (8 * i);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(in[pos++]) << (8 * i);
    return v;
  }
  int32_t i32() { return int32_t(u32()); }
  std::span<const uint8_t> bytes(size_t n) {
    need(n);
    std::span<const uint8_t> s = in.subspan(pos, n);
    pos += n;
    return s;
  }
  void expect_magic(const char* m) {
    need(4);
    if (std::memcmp(in.data() + pos, m, 4) != 0)
      throw FormatError("bad file magic");
    pos += 4;
  }
  void expect_end() const {
    if (pos != in.size()) throw CorruptionError("trailing bytes in file");
  }
};

void append_crc(Writer& w) {
  w.u32(crc32(w.out));
}

// Validates and strips the trailing checksum, returning the covered payload.
std::span<const uint8_t> checked_payload(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4) throw CorruptionError("file truncated");
  const std::span<const uint8_t> payload = bytes.first(bytes.size() - 4);
  uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= uint32_t(bytes[bytes.size() - 4 + size_t(i)]) << (8 * i);
  if (crc32(payload) != stored) throw FormatError("checksum mismatch");
  return payload;
}

constexpr uint8_t kModelVersion = 1;
constexpr uint8_t kFloatGraphVersion = 1;
constexpr uint8_t kLutVersion = 1;
constexpr uint8_t kContainerVersion = 1;
constexpr uint8_t kSymbolsVersion = 1;

// blob table: manifest references byte ranges inside the blob section
struct BlobWriter {
  std::vector<uint8_t> blob;

  json add(std::span<const uint8_t> bytes) {
    const size_t off = blob.size();
    blob.insert(blob.end(), bytes.begin(), bytes.end());
    return json::array({off, bytes.size()});
  }
  json add_f32(std::span<const float> v) {
    Writer w;
    for (float x : v) {
      uint32_t u;
      std::memcpy(&u, &x, 4);
      w.u32(u);
    }
    return add(w.out);
  }
  json add_i32(std::span<const int32_t> v) {
    Writer w;
    for (int32_t x : v) w.i32(x);
    return add(w.out);
  }
  json add_i8(std::span<const int8_t> v) {
    return add({reinterpret_cast<const uint8_t*>(v.data()), v.size()});
  }
  json add_u16(std::span<const uint16_t> v) {
    Writer w;
    for (uint16_t x : v) {
      w.u8(uint8_t(x));
      w.u8(uint8_t(x >> 8));
    }
    return add(w.out);
  }
};

struct BlobReader {
  std::span<const uint8_t> blob;

  std::span<const uint8_t> get(const json& ref, size_t elem_size) const {
    if (!ref.is_array() || ref.size() != 2) throw FormatError("bad blob reference");
    const size_t off = ref[0].get<size_t>();
    const size_t len = ref[1].get<size_t>();
    if (off > blob.size() || len > blob.size() - off || len % elem_size != 0)
      throw CorruptionError("blob reference out of range");
    return blob.subspan(off, len);
  }
  std::vector<float> get_f32(const json& ref) const {
    const auto b = get(ref, 4);
    std::vector<float> v(b.size() / 4);
    for (size_t i = 0; i < v.size(); ++i) {
      uint32_t u = 0;
      for (int k = 0; k < 4; ++k) u |= uint32_t(b[4 * i + size_t(k)]) << (8 * k);
      std::memcpy(&v[i], &u, 4);
    }
    return v;
  }
  std::vector<int32_t> get_i32(const json& ref) const {
    const auto b = get(ref, 4);
    std::vector<int32_t> v(b.size() / 4);
    for (size_t i = 0; i < v.size(); ++i) {
      uint32_t u = 0;
      for (int k = 0; k < 4; ++k) u |= uint32_t(b[4 * i + size_t(k)]) << (8 * k);
      v[i] = int32_t(u);
    }
    return v;
  }
  std::vector<int8_t> get_i8(const json& ref) const {
    const auto b = get(ref, 1);
    return {reinterpret_cast<const int8_t*>(b.data()),
            reinterpret_cast<const int8_t*>(b.data()) + b.size()};
  }
  std::vector<uint16_t> get_u16(const json& ref) const {
    const auto b = get(ref, 2);
    std::vector<uint16_t> v(b.size() / 2);
    for (size_t i = 0; i < v.size(); ++i)
      v[i] = uint16_t(b[2 * i]) | uint16_t(uint16_t(b[2 * i + 1]) << 8);
    return v;
  }
};

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::MaskedConv2d: return "masked_conv2d";
    case LayerKind::Conv1x1: return "conv1x1";
  }
  throw FormatError("unknown layer kind");
}

LayerKind kind_from(const std::string& s) {
  if (s == "conv2d") return LayerKind::Conv2d;
  if (s == "masked_conv2d") return LayerKind::MaskedConv2d;
  if (s == "conv1x1") return LayerKind::Conv1x1;
  throw FormatError("unknown layer kind: " + s);
}

const char* act_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "leaky_relu";
  }
  throw FormatError("unknown activation");
}

Activation act_from(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "leaky_relu") return Activation::LeakyRelu;
  throw FormatError("unknown activation: " + s);
}

json desc_to_json(const LayerDesc& d) {
  return json{{"kind", kind_name(d.kind)}, {"in_ch", d.in_ch},
              {"out_ch", d.out_ch},        {"ksize", d.ksize},
              {"act", act_name(d.act)},    {"leaky_slope", double(d.leaky_slope)}};
}

LayerDesc desc_from_json(const json& j) {
  LayerDesc d;
  d.kind = kind_from(j.at("kind").get<std::string>());
  d.in_ch = j.at("in_ch").get<uint32_t>();
  d.out_ch = j.at("out_ch").get<uint32_t>();
  d.ksize = j.at("ksize").get<uint32_t>();
  d.act = act_from(j.at("act").get<std::string>());
  d.leaky_slope = float(j.at("leaky_slope").get<double>());
  return d;
}

json quant_to_json(const QuantizerSpec& q) {
  return json{{"bits", q.bits},
              {"symmetric", q.symmetric},
              {"per_channel", q.granularity == Granularity::PerChannel},
              {"scales", std::vector<double>(q.scales.begin(), q.scales.end())},
              {"zero_point", q.zero_point}};
}

QuantizerSpec quant_from_json(const json& j) {
  QuantizerSpec q;
  q.bits = j.at("bits").get<int>();
  q.symmetric = j.at("symmetric").get<bool>();
  q.granularity = j.at("per_channel").get<bool>() ? Granularity::PerChannel
                                                  : Granularity::PerTensor;
  for (double s : j.at("scales")) q.scales.push_back(float(s));
  q.zero_point = j.at("zero_point").get<int32_t>();
  q.validate();
  return q;
}

json requant_to_json(const RequantParams& r) {
  json j{{"scale", double(r.scale)}, {"mul", r.mul},
         {"shift", r.shift},         {"pre_zero", r.pre_zero},
         {"clip_lo", r.clip_lo},     {"clip_hi", r.clip_hi},
         {"out_bits", r.out_bits}};
  j["neg_mul"] = r.neg_mul ? json(*r.neg_mul) : json(nullptr);
  return j;
}

RequantParams requant_from_json(const json& j) {
  RequantParams r;
  r.scale = float(j.at("scale").get<double>());
  r.mul = j.at("mul").get<int32_t>();
  r.shift = j.at("shift").get<int>();
  r.pre_zero = j.at("pre_zero").get<int32_t>();
  r.clip_lo = j.at("clip_lo").get<int32_t>();
  r.clip_hi = j.at("clip_hi").get<int32_t>();
  r.out_bits = j.at("out_bits").get<int>();
  if (!j.at("neg_mul").is_null()) r.neg_mul = j.at("neg_mul").get<int32_t>();
  return r;
}

json quant_layer_to_json(const QuantLayer& l, BlobWriter& blobs) {
  json j = desc_to_json(l.desc);
  j["in_quant"] = quant_to_json(l.in_quant);
  j["out_quant"] = quant_to_json(l.out_quant);
  j["weight_scales"] =
      std::vector<double>(l.weight_scales.begin(), l.weight_scales.end());
  json rq = json::array();
  for (const RequantParams& r : l.requant) rq.push_back(requant_to_json(r));
  j["requant"] = rq;
  j["weights"] = blobs.add_i8(l.weights);
  j["float_weights"] = blobs.add_f32(l.float_weights);
  j["bias"] = blobs.add_i32(l.bias);
  j["float_bias"] = blobs.add_f32(l.float_bias);
  return j;
}

QuantLayer quant_layer_from_json(const json& j, const BlobReader& blobs) {
  QuantLayer l;
  l.desc = desc_from_json(j);
  l.in_quant = quant_from_json(j.at("in_quant"));
  l.out_quant = quant_from_json(j.at("out_quant"));
  for (double s : j.at("weight_scales")) l.weight_scales.push_back(float(s));
  for (const json& r : j.at("requant")) l.requant.push_back(requant_from_json(r));
  l.weights = blobs.get_i8(j.at("weights"));
  l.float_weights = blobs.get_f32(j.at("float_weights"));
  l.bias = blobs.get_i32(j.at("bias"));
  l.float_bias = blobs.get_f32(j.at("float_bias"));
  return l;
}

json float_layer_to_json(const FloatLayer& l, BlobWriter& blobs) {
  json j = desc_to_json(l.desc);
  j["weights"] = blobs.add_f32(l.weights);
  j["bias"] = blobs.add_f32(l.bias);
  return j;
}

FloatLayer float_layer_from_json(const json& j, const BlobReader& blobs) {
  FloatLayer l;
  l.desc = desc_from_json(j);
  l.weights = blobs.get_f32(j.at("weights"));
  l.bias = blobs.get_f32(j.at("bias"));
  return l;
}

std::vector<uint8_t> wrap_manifest(const char* magic, uint8_t version,
                                   const json& manifest,
                                   std::vector<uint8_t> blob) {
  Writer w;
  w.magic(magic);
  w.u8(version);
  const std::string text = manifest.dump();
  w.u32(uint32_t(text.size()));
  w.bytes({reinterpret_cast<const uint8_t*>(text.data()), text.size()});
  w.u32(uint32_t(blob.size()));
  w.bytes(blob);
  append_crc(w);
  return std::move(w.out);
}

std::pair<json, std::vector<uint8_t>> unwrap_manifest(const char* magic,
                                                      uint8_t version,
                                                      std::span<const uint8_t> bytes) {
  const auto payload = checked_payload(bytes);
  Reader r{payload};
  r.expect_magic(magic);
  if (r.u8() != version) throw FormatError("unsupported file version");
  const uint32_t mlen = r.u32();
  const auto mbytes = r.bytes(mlen);
  const uint32_t blen = r.u32();
  const auto bbytes = r.bytes(blen);
  r.expect_end();
  json manifest;
  try {
    manifest = json::parse(mbytes.begin(), mbytes.end());
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("manifest parse failure: ") + e.what());
  }
  return {std::move(manifest), std::vector<uint8_t>(bbytes.begin(), bbytes.end())};
}

}  // namespace

// ---------------------------------------------------------------------------
// quantized model

std::vector<uint8_t> serialize_model(const Model& m) {
  validate_model(m);
  BlobWriter blobs;
  json manifest;
  manifest["version"] = m.version;
  manifest["y_channels"] = m.y_channels;
  manifest["z_channels"] = m.z_channels;
  manifest["mix_k"] = m.mix_k;
  manifest["discretization"] = json{{"sigma_q_min", kSigmaQMin},
                                    {"sigma_q_max", kSigmaQMax},
                                    {"sigma_levels", kSigmaLevels},
                                    {"mean_levels", kMeanLevels},
                                    {"frac_bits", kParamFracBits}};
  manifest["z_table"] = json{{"range", m.z_table.range},
                             {"cdf_max", m.z_table.cdf_max},
                             {"entries", blobs.add_u16(m.z_table.entries)}};
  auto stage = [&](const std::vector<QuantLayer>& layers) {
    json arr = json::array();
    for (const QuantLayer& l : layers) arr.push_back(quant_layer_to_json(l, blobs));
    return arr;
  };
  manifest["hyper"] = stage(m.hyper);
  manifest["context"] = stage(m.context);
  manifest["param"] = stage(m.param);
  return wrap_manifest("DLIM", kModelVersion, manifest, std::move(blobs.blob));
}

Model parse_model(std::span<const uint8_t> bytes) {
  auto [manifest, blob] = unwrap_manifest("DLIM", kModelVersion, bytes);
  const BlobReader blobs{blob};
  Model m;
  try {
    m.version = manifest.at("version").get<uint32_t>();
    m.y_channels = manifest.at("y_channels").get<uint32_t>();
    m.z_channels = manifest.at("z_channels").get<uint32_t>();
    m.mix_k = manifest.at("mix_k").get<uint32_t>();
    const json& disc = manifest.at("discretization");
    if (disc.at("sigma_q_min") != kSigmaQMin || disc.at("sigma_q_max") != kSigmaQMax ||
        disc.at("sigma_levels") != kSigmaLevels ||
        disc.at("mean_levels") != kMeanLevels ||
        disc.at("frac_bits") != kParamFracBits)
      throw FormatError("model: unsupported discretization config");
    const json& zt = manifest.at("z_table");
    m.z_table.range = zt.at("range").get<uint32_t>();
    m.z_table.cdf_max = zt.at("cdf_max").get<uint32_t>();
    m.z_table.entries = blobs.get_u16(zt.at("entries"));
    auto stage = [&](const json& arr) {
      std::vector<QuantLayer> layers;
      for (const json& l : arr) layers.push_back(quant_layer_from_json(l, blobs));
      return layers;
    };
    m.hyper = stage(manifest.at("hyper"));
    m.context = stage(manifest.at("context"));
    m.param = stage(manifest.at("param"));
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("model manifest: ") + e.what());
  }
  validate_model(m);
  return m;
}

void save_model(const std::string& path, const Model& m) {
  const auto bytes = serialize_model(m);
  write_file(path, bytes);
}

Model load_model(const std::string& path) { return parse_model(read_file(path)); }

// ---------------------------------------------------------------------------
// float graph

std::vector<uint8_t> serialize_float_graph(const FloatGraph& g) {
  validate_float_graph(g);
  BlobWriter blobs;
  json manifest;
  manifest["y_channels"] = g.y_channels;
  manifest["z_channels"] = g.z_channels;
  manifest["mix_k"] = g.mix_k;
  manifest["z_prior_sigma"] = g.z_prior_sigma;
  auto stage = [&](const std::vector<FloatLayer>& layers) {
    json arr = json::array();
    for (const FloatLayer& l : layers) arr.push_back(float_layer_to_json(l, blobs));
    return arr;
  };
  manifest["hyper"] = stage(g.hyper);
  manifest["context"] = stage(g.context);
  manifest["param"] = stage(g.param);
  return wrap_manifest("DLIF", kFloatGraphVersion, manifest, std::move(blobs.blob));
}

FloatGraph parse_float_graph(std::span<const uint8_t> bytes) {
  auto [manifest, blob] = unwrap_manifest("DLIF", kFloatGraphVersion, bytes);
  const BlobReader blobs{blob};
  FloatGraph g;
  try {
    g.y_channels = manifest.at("y_channels").get<uint32_t>();
    g.z_channels = manifest.at("z_channels").get<uint32_t>();
    g.mix_k = manifest.at("mix_k").get<uint32_t>();
    g.z_prior_sigma = manifest.at("z_prior_sigma").get<double>();
    auto stage = [&](const json& arr) {
      std::vector<FloatLayer> layers;
      for (const json& l : arr) layers.push_back(float_layer_from_json(l, blobs));
      return layers;
    };
    g.hyper = stage(manifest.at("hyper"));
    g.context = stage(manifest.at("context"));
    g.param = stage(manifest.at("param"));
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("float graph manifest: ") + e.what());
  }
  validate_float_graph(g);
  return g;
}

void save_float_graph(const std::string& path, const FloatGraph& g) {
  const auto bytes = serialize_float_graph(g);
  write_file(path, bytes);
}

FloatGraph load_float_graph(const std::string& path) {
  return parse_float_graph(read_file(path));
}

// ---------------------------------------------------------------------------
// LUT set

std::vector<uint8_t> serialize_luts(const LutSet& luts) {
  luts.config.validate();
  if (luts.entries.size() != size_t(LutSet::table_count()) * luts.config.table_len())
    throw ShapeError("serialize_luts: table payload size mismatch");
  Writer w;
  w.magic("DLUT");
  w.u8(kLutVersion);
  w.u32(luts.config.range);
  w.u32(luts.config.cdf_max);
  w.u32(uint32_t(kSigmaLevels));
  w.u32(uint32_t(kMeanLevels));
  char tag[16] = {};
  std::strncpy(tag, kCdfBuilderTag, sizeof(tag) - 1);
  w.bytes({reinterpret_cast<const uint8_t*>(tag), sizeof(tag)});
  w.u32(LutSet::table_count());
  for (uint16_t v : luts.entries) {
    w.u8(uint8_t(v));
    w.u8(uint8_t(v >> 8));
  }
  append_crc(w);
  return std::move(w.out);
}

LutSet parse_luts(std::span<const uint8_t> bytes) {
  const auto payload = checked_payload(bytes);
  Reader r{payload};
  r.expect_magic("DLUT");
  if (r.u8() != kLutVersion) throw FormatError("unsupported LUT file version");
  LutSet luts;
  luts.config.range = r.u32();
  luts.config.cdf_max = r.u32();
  if (r.u32() != uint32_t(kSigmaLevels) || r.u32() != uint32_t(kMeanLevels))
    throw FormatError("LUT file level counts do not match this build");
  r.bytes(16);  // builder tag, informational
  const uint32_t count = r.u32();
  if (count != LutSet::table_count()) throw FormatError("LUT file table count");
  luts.config.validate();
  const size_t n = size_t(count) * luts.config.table_len();
  const auto b = r.bytes(n * 2);
  r.expect_end();
  luts.entries.resize(n);
  for (size_t i = 0; i < n; ++i)
    luts.entries[i] = uint16_t(b[2 * i]) | uint16_t(uint16_t(b[2 * i + 1]) << 8);
  return luts;
}

void save_luts(const std::string& path, const LutSet& luts) {
  const auto bytes = serialize_luts(luts);
  write_file(path, bytes);
}

LutSet load_luts(const std::string& path) { return parse_luts(read_file(path)); }

// ---------------------------------------------------------------------------
// bitstream container

namespace {

// Tensors at this scale stay small; dimension caps keep a corrupted header
// from turning into an allocation bomb.
constexpr uint64_t kMaxDim = 1u << 16;
constexpr uint64_t kMaxVolume = 1u << 26;

void check_shape3(const Shape& s) {
  if (s.size() != 3) throw ShapeError("container: shapes must be CHW");
  uint64_t volume = 1;
  for (uint32_t d : s) {
    if (d == 0 || d > kMaxDim) throw CorruptionError("tensor dimension out of range");
    volume *= d;
  }
  if (volume > kMaxVolume) throw CorruptionError("tensor volume out of range");
}

void write_shape3(Writer& w, const Shape& s) {
  check_shape3(s);
  for (uint32_t d : s) w.u32(d);
}

Shape read_shape3(Reader& r) {
  Shape s(3);
  for (uint32_t& d : s) d = r.u32();
  check_shape3(s);
  return s;
}

}  // namespace

std::vector<uint8_t> serialize_container(const Container& c) {
  Writer w;
  w.magic("DLIC");
  w.u8(kContainerVersion);
  write_shape3(w, c.y_shape);
  write_shape3(w, c.z_shape);
  w.u32(uint32_t(c.streams.hyper.size()));
  w.bytes(c.streams.hyper);
  w.u32(uint32_t(c.streams.main.size()));
  w.bytes(c.streams.main);
  w.u64(c.streams.escape_bits);
  const size_t esc_bytes = size_t((c.streams.escape_bits + 7) / 8);
  if (c.streams.escape.size() != esc_bytes)
    throw ShapeError("container: escape byte count mismatch");
  w.bytes(c.streams.escape);
  return std::move(w.out);
}

Container parse_container(std::span<const uint8_t> bytes) {
  Reader r{bytes};
  r.expect_magic("DLIC");
  if (r.u8() != kContainerVersion) throw FormatError("unsupported container version");
  Container c;
  c.y_shape = read_shape3(r);
  c.z_shape = read_shape3(r);
  const uint32_t hlen = r.u32();
  const auto h = r.bytes(hlen);
  c.streams.hyper.assign(h.begin(), h.end());
  const uint32_t mlen = r.u32();
  const auto m = r.bytes(mlen);
  c.streams.main.assign(m.begin(), m.end());
  c.streams.escape_bits = r.u64();
  const auto e = r.bytes(size_t((c.streams.escape_bits + 7) / 8));
  c.streams.escape.assign(e.begin(), e.end());
  r.expect_end();
  return c;
}

// ---------------------------------------------------------------------------
// symbol tensors

std::vector<uint8_t> serialize_symbols(const SymbolTensor& y, const SymbolTensor& z) {
  y.validate();
  z.validate();
  Writer w;
  w.magic("DLSY");
  w.u8(kSymbolsVersion);
  write_shape3(w, y.shape);
  write_shape3(w, z.shape);
  for (int32_t v : y.data) w.i32(v);
  for (int32_t v : z.data) w.i32(v);
  return std::move(w.out);
}

std::pair<SymbolTensor, SymbolTensor> parse_symbols(std::span<const uint8_t> bytes) {
  Reader r{bytes};
  r.expect_magic("DLSY");
  if (r.u8() != kSymbolsVersion) throw FormatError("unsupported symbols version");
  SymbolTensor y, z;
  y.shape = read_shape3(r);
  z.shape = read_shape3(r);
  y.data.resize(shape_volume(y.shape));
  z.data.resize(shape_volume(z.shape));
  for (int32_t& v : y.data) v = r.i32();
  for (int32_t& v : z.data) v = r.i32();
  r.expect_end();
  return {std::move(y), std::move(z)};
}

// ---------------------------------------------------------------------------
// calibration report

std::string report_to_json(const CalibrationReport& r) {
  auto stage = [](const std::vector<CalibrationReport::LayerCal>& layers) {
    json arr = json::array();
    for (const auto& l : layers)
      arr.push_back(json{
          {"weight_scales",
           std::vector<double>(l.weight_scales.begin(), l.weight_scales.end())},
          {"out_min", double(l.out_min)},
          {"out_max", double(l.out_max)}});
    return arr;
  };
  json j{{"hyper", stage(r.hyper)},
         {"context", stage(r.context)},
         {"param", stage(r.param)},
         {"feature_min", double(r.feature_min)},
         {"feature_max", double(r.feature_max)}};
  return j.dump(2);
}

CalibrationReport report_from_json(const std::string& text) {
  CalibrationReport rep;
  try {
    const json j = json::parse(text);
    auto stage = [](const json& arr) {
      std::vector<CalibrationReport::LayerCal> layers;
      for (const json& l : arr) {
        CalibrationReport::LayerCal cal;
        for (double s : l.at("weight_scales")) cal.weight_scales.push_back(float(s));
        cal.out_min = float(l.at("out_min").get<double>());
        cal.out_max = float(l.at("out_max").get<double>());
        layers.push_back(std::move(cal));
      }
      return layers;
    };
    rep.hyper = stage(j.at("hyper"));
    rep.context = stage(j.at("context"));
    rep.param = stage(j.at("param"));
    rep.feature_min = float(j.at("feature_min").get<double>());
    rep.feature_max = float(j.at("feature_max").get<double>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("calibration report: ") + e.what());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// calibration ingestion

std::vector<CalibPair> ingest_calibration(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw FormatError("calibration path is not a directory");

  Shape y_shape, z_shape;
  {
    const fs::path manifest = root / "shapes.json";
    if (!fs::exists(manifest)) throw FormatError("calibration dir lacks shapes.json");
    const auto bytes = read_file(manifest.string());
    try {
      const json j = json::parse(bytes.begin(), bytes.end());
      for (uint32_t d : j.at("y_shape")) y_shape.push_back(d);
      for (uint32_t d : j.at("z_shape")) z_shape.push_back(d);
    } catch (const json::exception& e) {
      throw FormatError(std::string("shapes.json: ") + e.what());
    }
    if (y_shape.size() != 3 || z_shape.size() != 3)
      throw FormatError("shapes.json: shapes must be CHW");
  }

  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    const std::string suffix = ".y.bin";
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      stems.push_back(name.substr(0, name.size() - suffix.size()));
  }
  if (stems.empty()) throw ArgumentError("calibration dir has no tensor pairs");
  std::sort(stems.begin(), stems.end());

  auto read_floats = [](const fs::path& p, size_t expected) {
    const auto bytes = read_file(p.string());
    if (bytes.size() != expected * 4)
      throw FormatError("calibration payload size mismatch: " + p.string());
    std::vector<float> v(expected);
    for (size_t i = 0; i < expected; ++i) {
      uint32_t u = 0;
      for (int k = 0; k < 4; ++k) u |= uint32_t(bytes[4 * i + size_t(k)]) << (8 * k);
      std::memcpy(&v[i], &u, 4);
    }
    return v;
  };

  std::vector<CalibPair> batch;
  for (const std::string& stem : stems) {
    CalibPair pair;
    pair.y.shape = y_shape;
    pair.y.data = read_floats(root / (stem + ".y.bin"), shape_volume(y_shape));
    pair.z.shape = z_shape;
    pair.z.data = read_floats(root / (stem + ".z.bin"), shape_volume(z_shape));
    pair.y.validate();
    pair.z.validate();
    batch.push_back(std::move(pair));
  }
  return batch;
}

void write_calibration_dir(const std::string& dir, std::span<const CalibPair> batch) {
  if (batch.empty()) throw ArgumentError("write_calibration_dir: empty batch");
  const fs::path root(dir);
  fs::create_directories(root);
  {
    json j{{"y_shape", batch[0].y.shape}, {"z_shape", batch[0].z.shape}};
    const std::string text = j.dump(2);
    write_file((root / "shapes.json").string(),
               {reinterpret_cast<const uint8_t*>(text.data()), text.size()});
  }
  auto write_floats = [](const fs::path& p, std::span<const float> v) {
    Writer w;
    for (float x : v) {
      uint32_t u;
      std::memcpy(&u, &x, 4);
      w.u32(u);
    }
    write_file(p.string(), w.out);
  };
  for (size_t i = 0; i < batch.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "%04zu", i);
    write_floats(root / (std::string(stem) + ".y.bin"), batch[i].y.data);
    write_floats(root / (std::string(stem) + ".z.bin"), batch[i].z.data);
  }
}

}  // namespace dlic
