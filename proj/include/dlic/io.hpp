#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dlic/codec.hpp"
#include "dlic/model.hpp"

namespace dlic {

// All on-disk formats are little-endian and version-tagged; readers reject
// unknown magics/versions (FormatError) and truncated or trailing-garbage
// payloads (CorruptionError).

uint32_t crc32(std::span<const uint8_t> bytes);
uint64_t fnv1a64(std::span<const uint8_t> bytes);

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const uint8_t> bytes);

// Quantized model container: JSON manifest (topology, quantizers, requant
// constants, discretization config) plus raw integer/float blobs.
std::vector<uint8_t> serialize_model(const Model& m);
Model parse_model(std::span<const uint8_t> bytes);
void save_model(const std::string& path, const Model& m);
Model load_model(const std::string& path);

// Full-precision graph container (input of calibrate/quantize).
std::vector<uint8_t> serialize_float_graph(const FloatGraph& g);
FloatGraph parse_float_graph(std::span<const uint8_t> bytes);
void save_float_graph(const std::string& path, const FloatGraph& g);
FloatGraph load_float_graph(const std::string& path);

// LUT set: fixed header (range, cdf_max, level counts, builder tag) followed
// by 4160 tables of 2R+2 uint16 entries and a checksum.
std::vector<uint8_t> serialize_luts(const LutSet& luts);
LutSet parse_luts(std::span<const uint8_t> bytes);
void save_luts(const std::string& path, const LutSet& luts);
LutSet load_luts(const std::string& path);

// Bitstream container: "DLIC", version, tensor shapes, hyper/main byte
// sections, escape bit section.
struct Container {
  Shape y_shape;
  Shape z_shape;
  EncodedStreams streams;
};
std::vector<uint8_t> serialize_container(const Container& c);
Container parse_container(std::span<const uint8_t> bytes);

// Symbol tensors (coder input/output).
std::vector<uint8_t> serialize_symbols(const SymbolTensor& y, const SymbolTensor& z);
std::pair<SymbolTensor, SymbolTensor> parse_symbols(std::span<const uint8_t> bytes);

// Calibration report as standalone JSON.
std::string report_to_json(const CalibrationReport& r);
CalibrationReport report_from_json(const std::string& text);

// Calibration ingestion: a directory with shapes.json ({"y_shape": [C,H,W],
// "z_shape": [C,H,W]}) and raw float32 pairs <stem>.y.bin / <stem>.z.bin,
// ordered lexicographically by stem.
std::vector<CalibPair> ingest_calibration(const std::string& dir);
void write_calibration_dir(const std::string& dir, std::span<const CalibPair> batch);

}  // namespace dlic
