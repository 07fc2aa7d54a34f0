#include "dlic/discretize.hpp"

#include <cmath>

namespace dlic {

double sigma_reconstruct(int combined) {
  if (combined < 0 || combined >= kSigmaLevels)
    throw ArgumentError("sigma_reconstruct: index out of range");
  const int major = combined >> 3;
  const int minor = combined & 7;
  // 2^(major-3) * (1 + minor/8); exact in double for every level
  return std::ldexp(1.0 + minor / 8.0, major - 3);
}

std::vector<int32_t> sigma_threshold_table() {
  // levels 0..63 in the quantized domain; the binning rounds up, so the index
  // of q is the count of levels strictly below it
  std::vector<int32_t> t;
  t.reserve(kSigmaLevels - 1);
  for (int idx = 0; idx + 1 < kSigmaLevels; ++idx) {
    const int major = idx >> 3;
    const int minor = idx & 7;
    t.push_back(int32_t(8 + minor) << major);  // 64 * reconstruction value
  }
  return t;
}

int sigma_bin_compare(int32_t q_sigma, std::span<const int32_t> thresholds) {
  int32_t q = q_sigma;
  if (q < kSigmaQMin) q = kSigmaQMin;
  if (q > kSigmaQMax) q = kSigmaQMax;
  int idx = 0;
  for (int32_t t : thresholds) idx += int(q > t);
  return idx;
}

void sigma_bin_batch(std::span<const int16_t> q, std::span<uint8_t> out) {
  if (q.size() != out.size()) throw ShapeError("sigma_bin_batch: size mismatch");
  for (size_t i = 0; i < q.size(); ++i)
    out[i] = uint8_t(sigma_bin(q[i]).combined());
}

void sigma_bin_batch_compare_scan(std::span<const int16_t> q,
                                  std::span<const int32_t> thresholds,
                                  std::span<uint8_t> out) {
  if (q.size() != out.size())
    throw ShapeError("sigma_bin_batch_compare_scan: size mismatch");
  for (size_t i = 0; i < q.size(); ++i) {
    int32_t v = q[i];
    if (v < kSigmaQMin) v = kSigmaQMin;
    if (v > kSigmaQMax) v = kSigmaQMax;
    size_t idx = 0;
    while (idx < thresholds.size() && v > thresholds[idx]) ++idx;
    out[i] = uint8_t(idx);
  }
}

void sigma_bin_batch_compare_vec(std::span<const int16_t> q,
                                 std::span<const int32_t> thresholds,
                                 std::span<uint8_t> out) {
  if (q.size() != out.size())
    throw ShapeError("sigma_bin_batch_compare_vec: size mismatch");
  const size_t n_thr = thresholds.size();
  for (size_t i = 0; i < q.size(); ++i) {
    int32_t v = q[i];
    if (v < kSigmaQMin) v = kSigmaQMin;
    if (v > kSigmaQMax) v = kSigmaQMax;
    int acc = 0;
    for (size_t j = 0; j < n_thr; ++j) acc += int(v > thresholds[j]);
    out[i] = uint8_t(acc);
  }
}

}  // namespace dlic
