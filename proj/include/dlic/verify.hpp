#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlic/io.hpp"
#include "dlic/toygen.hpp"

namespace dlic {

// Determinism verifier: encodes a seeded random corpus under several
// execution configurations (thread counts over corpus items; the per-tensor
// loop is inherently serial), checks the containers byte-for-byte, and
// cross-decodes every container under every other configuration.
struct VerifyOptions {
  uint64_t seed = 1;
  uint32_t count = 100;
  std::vector<uint32_t> thread_counts = {1, 4};
  uint32_t height = 8;
  uint32_t width = 8;
  double outlier_rate = 0.01;
  std::string dump_dir;  // when set, containers of the first config are written here
};

struct VerifyReport {
  struct EncodeConfig {
    uint32_t threads = 0;
    uint64_t digest = 0;  // FNV-1a over all containers in corpus order
  };
  struct CrossCheck {
    uint32_t encode_threads = 0;
    uint32_t decode_threads = 0;
    uint32_t failures = 0;
    uint32_t count = 0;
  };
  std::vector<EncodeConfig> encodes;
  std::vector<CrossCheck> checks;
  bool streams_identical = false;
  uint32_t total_failures = 0;

  bool ok() const { return streams_identical && total_failures == 0; }
  std::string to_json() const;
};

VerifyReport run_verify(const Model& model, const LutSet& luts,
                        const VerifyOptions& opts);

// Timing comparison of the sigma discretizers on one shared input buffer:
// calculation-based vs per-element comparison scan vs branchless vectorized
// comparison. Times are best-of-reps totals for the whole buffer.
struct BenchResult {
  size_t n = 0;
  double calc_us = 0.0;
  double scan_us = 0.0;
  double vec_us = 0.0;
  bool calc_beats_vec() const { return calc_us < vec_us; }
};

BenchResult bench_discretize(size_t n, uint64_t seed = 1, int reps = 5);

}  // namespace dlic
