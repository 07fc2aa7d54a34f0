#include "dlic/verify.hpp"

#include <chrono>
#include <filesystem>
#include <thread>

#include "json.hpp"

namespace dlic {

namespace {

// Runs fn(i) for i in [0, count) over `threads` workers with a static
// partition; results land in caller-owned slots, so the outcome cannot
// depend on scheduling.
template <typename Fn>
void parallel_for(uint32_t count, uint32_t threads, Fn&& fn) {
  if (threads <= 1) {
    for (uint32_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (uint32_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (uint32_t i = t; i < count; i += threads) fn(i);
    });
  }
  for (std::thread& th : pool) th.join();
}

}  // namespace

std::string VerifyReport::to_json() const {
  nlohmann::json j;
  j["streams_identical"] = streams_identical;
  j["total_failures"] = total_failures;
  nlohmann::json encs = nlohmann::json::array();
  for (const EncodeConfig& e : encodes) {
    char digest[24];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(e.digest));
    encs.push_back({{"threads", e.threads}, {"digest", digest}});
  }
  j["encodes"] = encs;
  nlohmann::json chks = nlohmann::json::array();
  for (const CrossCheck& c : checks)
    chks.push_back({{"encode_threads", c.encode_threads},
                    {"decode_threads", c.decode_threads},
                    {"failures", c.failures},
                    {"count", c.count}});
  j["checks"] = chks;
  return j.dump(2);
}

VerifyReport run_verify(const Model& model, const LutSet& luts,
                        const VerifyOptions& opts) {
  if (opts.count == 0) throw ArgumentError("run_verify: empty corpus");
  if (opts.thread_counts.empty())
    throw ArgumentError("run_verify: no execution configurations");

  const FloatGraph shape_src = make_toy_graph(opts.seed);
  if (shape_src.y_channels != model.y_channels ||
      shape_src.z_channels != model.z_channels)
    throw ShapeError("run_verify: corpus generator does not match model");

  // corpus, generated once
  std::vector<SymbolTensor> ys(opts.count), zs(opts.count);
  for (uint32_t i = 0; i < opts.count; ++i) {
    auto [y, z] = make_symbol_pair(shape_src, opts.seed + 7919ull * i, opts.height,
                                   opts.width, opts.outlier_rate);
    ys[i] = std::move(y);
    zs[i] = std::move(z);
  }

  VerifyReport rep;

  // encode under each configuration
  std::vector<std::vector<std::vector<uint8_t>>> encoded(opts.thread_counts.size());
  for (size_t cfg = 0; cfg < opts.thread_counts.size(); ++cfg) {
    auto& slot = encoded[cfg];
    slot.resize(opts.count);
    parallel_for(opts.count, opts.thread_counts[cfg], [&](uint32_t i) {
      Container c;
      c.y_shape = ys[i].shape;
      c.z_shape = zs[i].shape;
      c.streams = encode_tensor(model, luts, ys[i], zs[i]);
      slot[i] = serialize_container(c);
    });
    uint64_t digest = 0xcbf29ce484222325ull;
    for (const auto& bytes : slot) {
      const uint64_t h = fnv1a64(bytes);
      for (int b = 0; b < 8; ++b) {
        digest ^= (h >> (8 * b)) & 0xFFu;
        digest *= 0x100000001b3ull;
      }
    }
    rep.encodes.push_back({opts.thread_counts[cfg], digest});
  }

  rep.streams_identical = true;
  for (size_t cfg = 1; cfg < encoded.size(); ++cfg)
    for (uint32_t i = 0; i < opts.count; ++i)
      if (encoded[cfg][i] != encoded[0][i]) rep.streams_identical = false;

  // cross-decode: containers from config A decoded under config B
  for (size_t a = 0; a < encoded.size(); ++a)
    for (size_t b = 0; b < opts.thread_counts.size(); ++b) {
      VerifyReport::CrossCheck chk;
      chk.encode_threads = opts.thread_counts[a];
      chk.decode_threads = opts.thread_counts[b];
      chk.count = opts.count;
      std::vector<uint8_t> fail(opts.count, 0);
      parallel_for(opts.count, opts.thread_counts[b], [&](uint32_t i) {
        try {
          const Container c = parse_container(encoded[a][i]);
          auto [y, z] = decode_tensor(model, luts, c.streams, c.y_shape, c.z_shape);
          if (y.data != ys[i].data || z.data != zs[i].data) fail[i] = 1;
        } catch (const Error&) {
          fail[i] = 1;
        }
      });
      for (uint8_t f : fail) chk.failures += f;
      rep.total_failures += chk.failures;
      rep.checks.push_back(chk);
    }

  if (!opts.dump_dir.empty()) {
    std::filesystem::create_directories(opts.dump_dir);
    for (uint32_t i = 0; i < opts.count; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "item%04u.dlic", i);
      write_file((std::filesystem::path(opts.dump_dir) / name).string(),
                 encoded[0][i]);
    }
    const std::string text = rep.to_json();
    write_file((std::filesystem::path(opts.dump_dir) / "report.json").string(),
               {reinterpret_cast<const uint8_t*>(text.data()), text.size()});
  }
  return rep;
}

BenchResult bench_discretize(size_t n, uint64_t seed, int reps) {
  if (n == 0) throw ArgumentError("bench_discretize: empty input");
  std::mt19937_64 rng(seed);
  std::vector<int16_t> input(n);
  for (int16_t& v : input) v = int16_t(int32_t(rng() & 0xFFFF) - 32768);
  std::vector<uint8_t> out_calc(n), out_scan(n), out_vec(n);
  const std::vector<int32_t> thresholds = sigma_threshold_table();

  auto time_us = [&](auto&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      fn();
      const auto t1 = std::chrono::steady_clock::now();
      best = std::min(best,
                      std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    return best;
  };

  BenchResult res;
  res.n = n;
  res.calc_us = time_us([&] { sigma_bin_batch(input, out_calc); });
  res.scan_us =
      time_us([&] { sigma_bin_batch_compare_scan(input, thresholds, out_scan); });
  res.vec_us =
      time_us([&] { sigma_bin_batch_compare_vec(input, thresholds, out_vec); });
  if (out_calc != out_scan || out_calc != out_vec)
    throw DeterminismError("bench_discretize: discretizer variants disagree");
  return res;
}

}  // namespace dlic
