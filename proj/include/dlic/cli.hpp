#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dlic::cli {

// Exit codes: 0 success, 1 usage, 2 format/corruption, 3 determinism violation.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFormat = 2;
inline constexpr int kExitDeterminism = 3;

struct GenArgs {
  uint64_t seed = 1;
  std::string out_model;           // float graph file
  std::string out_calib;           // calibration directory
  std::string out_symbols;         // symbol file for encode demos
  uint32_t height = 8, width = 8;
  uint32_t calib_count = 4;
};

struct CalibrateArgs {
  std::string model;  // float graph file
  std::string data;   // calibration directory
  std::string out;    // report JSON
};

struct QuantizeArgs {
  std::string model;   // float graph file
  std::string report;  // report JSON
  std::string out;     // quantized model file
};

struct BuildLutsArgs {
  uint32_t range = 64;
  std::string out;
};

struct EncodeArgs {
  std::string model, luts, symbols, out;
};

struct DecodeArgs {
  std::string model, luts, input, out;
};

struct VerifyArgs {
  std::string model, luts;
  uint64_t seed = 1;
  uint32_t corpus_size = 100;
  uint32_t threads = 4;
  std::string dump_dir;
  std::string report_out;
};

struct BenchArgs {
  uint64_t n = 1000000;
  uint64_t seed = 1;
};

int cmd_gen(const GenArgs& a);
int cmd_calibrate(const CalibrateArgs& a);
int cmd_quantize(const QuantizeArgs& a);
int cmd_build_luts(const BuildLutsArgs& a);
int cmd_encode(const EncodeArgs& a);
int cmd_decode(const DecodeArgs& a);
int cmd_verify(const VerifyArgs& a);
int cmd_bench(const BenchArgs& a);

}  // namespace dlic::cli
