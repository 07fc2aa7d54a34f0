#include "dlic/cdf.hpp"

#include <algorithm>
#include <cmath>

namespace dlic {

void LutConfig::validate() const {
  if (range < 4) throw ArgumentError("LutConfig: range must be at least 4");
  if (cdf_max > kWeightCap) throw ArgumentError("LutConfig: cdf_max above 2^12");
  if (cdf_max <= 2 * range + 1)
    throw ArgumentError("LutConfig: cdf_max too small for strict monotone tables");
}

namespace {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

CdfTable build_cdf_table(double sigma, double mean_frac, const LutConfig& cfg) {
  cfg.validate();
  if (!(sigma > 0.0)) throw ArgumentError("build_cdf_table: sigma must be positive");

  const int r = int(cfg.range);
  const int64_t top = int64_t(cfg.cdf_max);
  std::vector<int64_t> raw(size_t(2 * r + 1));
  for (int k = 0; k <= 2 * r; ++k) {
    const double x = (double(k - r) + 0.5 - mean_frac) / sigma;
    raw[size_t(k)] = std::llround(double(top) * normal_cdf(x));
  }

  // Monotone repair: force a strictly increasing staircase from 0 to cdf_max
  // so every interior symbol stays codable. Forward pass bumps flats, the
  // backward pass pulls the tail below the pinned endpoint.
  raw[0] = 0;
  for (int k = 1; k <= 2 * r; ++k) raw[size_t(k)] = std::max(raw[size_t(k)], raw[size_t(k - 1)] + 1);
  raw[size_t(2 * r)] = top;
  for (int k = 2 * r - 1; k >= 1; --k)
    raw[size_t(k)] = std::min(raw[size_t(k)], raw[size_t(k + 1)] - 1);

  CdfTable t(cfg.table_len());
  for (int k = 0; k <= 2 * r; ++k) t[size_t(k)] = uint16_t(raw[size_t(k)]);
  t[cfg.table_len() - 1] = uint16_t(top);  // reserved trailing slot
  return t;
}

CdfTable build_gaussian_cdf(int sigma_combined, int mean_frac_index,
                            const LutConfig& cfg) {
  if (sigma_combined < 0 || sigma_combined >= kSigmaLevels)
    throw ArgumentError("build_gaussian_cdf: sigma index out of range");
  if (mean_frac_index < 0 || mean_frac_index >= kMeanLevels)
    throw ArgumentError("build_gaussian_cdf: mean index out of range");
  return build_cdf_table(sigma_reconstruct(sigma_combined),
                         double(mean_frac_index) / kMeanLevels, cfg);
}

LutSet build_all_luts(const LutConfig& cfg) {
  cfg.validate();
  LutSet set;
  set.config = cfg;
  set.entries.reserve(size_t(LutSet::table_count()) * cfg.table_len());
  for (int mean = 0; mean < kMeanLevels; ++mean)
    for (int sig = 0; sig < kSigmaLevels; ++sig) {
      const CdfTable t = build_gaussian_cdf(sig, mean, cfg);
      set.entries.insert(set.entries.end(), t.begin(), t.end());
    }
  return set;
}

void GmmQuery::validate() const {
  if (count < 1 || count > kMaxMixture)
    throw ArgumentError("GmmQuery: component count out of range");
  uint32_t weight_sum = 0;
  for (int k = 0; k < count; ++k) {
    if (comp[size_t(k)].weight > kWeightCap)
      throw ArgumentError("GmmQuery: weight above cap");
    weight_sum += comp[size_t(k)].weight;
  }
  if (weight_sum == 0) throw ArgumentError("GmmQuery: all weights zero");
}

uint32_t gmm_cdf_value(int64_t y, const GmmQuery& q, const LutSet& luts) {
  const int64_t r = int64_t(luts.config.range);
  uint32_t acc = 0;
  for (int k = 0; k < q.count; ++k) {
    const GmmComponent& c = q.comp[size_t(k)];
    const int64_t p = y - c.mean_floor;
    uint32_t ck;
    if (p >= r)
      ck = luts.config.cdf_max;
    else if (p <= -r)
      ck = 0;
    else
      ck = luts.table(c.outer)[size_t(p + r)];
    acc += c.weight * ck;
  }
  return acc;
}

uint32_t gmm_total(const GmmQuery& q, const LutSet& luts) {
  uint32_t acc = 0;
  for (int k = 0; k < q.count; ++k) acc += q.comp[size_t(k)].weight * luts.config.cdf_max;
  return acc;
}

}  // namespace dlic
