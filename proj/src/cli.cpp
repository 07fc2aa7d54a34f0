#include "dlic/cli.hpp"

#include <cstdio>

#include "dlic/verify.hpp"

namespace dlic::cli {

namespace {

int guarded(const char* what, int (*fn)(const void*), const void* args) {
  try {
    return fn(args);
  } catch (const DeterminismError& e) {
    std::fprintf(stderr, "%s: determinism violation: %s\n", what, e.what());
    return kExitDeterminism;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "%s: format error: %s\n", what, e.what());
    return kExitFormat;
  } catch (const CorruptionError& e) {
    std::fprintf(stderr, "%s: corrupt input: %s\n", what, e.what());
    return kExitFormat;
  } catch (const Error& e) {
    std::fprintf(stderr, "%s: %s\n", what, e.what());
    return kExitUsage;
  }
}

template <typename A, typename Fn>
int run(const char* what, const A& args, Fn fn) {
  struct Ctx {
    const A* a;
    Fn* f;
  } ctx{&args, &fn};
  return guarded(
      what,
      [](const void* p) {
        const Ctx* c = static_cast<const Ctx*>(p);
        return (*c->f)(*c->a);
      },
      &ctx);
}

}  // namespace

int cmd_gen(const GenArgs& a) {
  return run("gen", a, [](const GenArgs& args) {
    const FloatGraph g = make_toy_graph(args.seed);
    if (!args.out_model.empty()) {
      save_float_graph(args.out_model, g);
      std::printf("wrote float graph: %s\n", args.out_model.c_str());
    }
    if (!args.out_calib.empty()) {
      const auto batch = make_calibration_batch(g, args.seed + 1000,
                                                args.calib_count, args.height,
                                                args.width);
      write_calibration_dir(args.out_calib, batch);
      std::printf("wrote %u calibration pairs: %s\n", args.calib_count,
                  args.out_calib.c_str());
    }
    if (!args.out_symbols.empty()) {
      auto [y, z] = make_symbol_pair(g, args.seed + 5000, args.height, args.width,
                                     0.01);
      write_file(args.out_symbols, serialize_symbols(y, z));
      std::printf("wrote symbols: %s\n", args.out_symbols.c_str());
    }
    return kExitOk;
  });
}

int cmd_calibrate(const CalibrateArgs& a) {
  return run("calibrate", a, [](const CalibrateArgs& args) {
    const FloatGraph g = load_float_graph(args.model);
    const std::vector<CalibPair> batch = ingest_calibration(args.data);
    const CalibrationReport rep = calibrate(g, batch);
    const std::string text = report_to_json(rep);
    write_file(args.out, {reinterpret_cast<const uint8_t*>(text.data()), text.size()});
    std::printf("calibrated %zu layers over %zu pairs -> %s\n",
                g.hyper.size() + g.context.size() + g.param.size(), batch.size(),
                args.out.c_str());
    return kExitOk;
  });
}

int cmd_quantize(const QuantizeArgs& a) {
  return run("quantize", a, [](const QuantizeArgs& args) {
    const FloatGraph g = load_float_graph(args.model);
    const auto report_bytes = read_file(args.report);
    const CalibrationReport rep = report_from_json(
        std::string(report_bytes.begin(), report_bytes.end()));
    const Model m = quantize_graph(g, rep);
    save_model(args.out, m);
    std::printf("wrote quantized model: %s\n", args.out.c_str());
    return kExitOk;
  });
}

int cmd_build_luts(const BuildLutsArgs& a) {
  return run("build-luts", a, [](const BuildLutsArgs& args) {
    LutConfig cfg;
    cfg.range = args.range;
    const LutSet luts = build_all_luts(cfg);
    save_luts(args.out, luts);
    std::printf("wrote %u tables (R=%u, len=%u): %s\n", LutSet::table_count(),
                cfg.range, cfg.table_len(), args.out.c_str());
    return kExitOk;
  });
}

int cmd_encode(const EncodeArgs& a) {
  return run("encode", a, [](const EncodeArgs& args) {
    const Model m = load_model(args.model);
    const LutSet luts = load_luts(args.luts);
    auto [y, z] = parse_symbols(read_file(args.symbols));
    Container c;
    c.y_shape = y.shape;
    c.z_shape = z.shape;
    c.streams = encode_tensor(m, luts, y, z);
    const auto bytes = serialize_container(c);
    write_file(args.out, bytes);
    std::printf("encoded %zu symbols -> %zu bytes: %s\n", y.size() + z.size(),
                bytes.size(), args.out.c_str());
    return kExitOk;
  });
}

int cmd_decode(const DecodeArgs& a) {
  return run("decode", a, [](const DecodeArgs& args) {
    const Model m = load_model(args.model);
    const LutSet luts = load_luts(args.luts);
    const Container c = parse_container(read_file(args.input));
    auto [y, z] = decode_tensor(m, luts, c.streams, c.y_shape, c.z_shape);
    write_file(args.out, serialize_symbols(y, z));
    std::printf("decoded %zu symbols: %s\n", y.size() + z.size(), args.out.c_str());
    return kExitOk;
  });
}

int cmd_verify(const VerifyArgs& a) {
  return run("verify", a, [](const VerifyArgs& args) {
    const Model m = load_model(args.model);
    const LutSet luts = load_luts(args.luts);
    VerifyOptions opts;
    opts.seed = args.seed;
    opts.count = args.corpus_size;
    opts.thread_counts = {1, args.threads};
    opts.dump_dir = args.dump_dir;
    const VerifyReport rep = run_verify(m, luts, opts);

    for (const auto& e : rep.encodes)
      std::printf("encode threads=%-2u digest=%016llx\n", e.threads,
                  static_cast<unsigned long long>(e.digest));
    for (const auto& c : rep.checks)
      std::printf("enc@%u/dec@%u failures %u/%u (%.1f%%)\n", c.encode_threads,
                  c.decode_threads, c.failures, c.count,
                  100.0 * c.failures / c.count);
    std::printf("streams byte-identical: %s\n", rep.streams_identical ? "yes" : "no");
    if (!args.report_out.empty()) {
      const std::string text = rep.to_json();
      write_file(args.report_out,
                 {reinterpret_cast<const uint8_t*>(text.data()), text.size()});
    }
    return rep.ok() ? kExitOk : kExitDeterminism;
  });
}

int cmd_bench(const BenchArgs& a) {
  return run("bench-discretize", a, [](const BenchArgs& args) {
    const BenchResult r = bench_discretize(args.n, args.seed);
    std::printf("inputs: %zu\n", r.n);
    std::printf("%-28s %12.1f us  (%.2f ns/elem)\n", "calculation",
                r.calc_us, 1e3 * r.calc_us / double(r.n));
    std::printf("%-28s %12.1f us  (%.2f ns/elem)\n", "comparison (scan)",
                r.scan_us, 1e3 * r.scan_us / double(r.n));
    std::printf("%-28s %12.1f us  (%.2f ns/elem)\n", "comparison (vectorized)",
                r.vec_us, 1e3 * r.vec_us / double(r.n));
    std::printf("calculation faster than vectorized comparison: %s\n",
                r.calc_beats_vec() ? "yes" : "no");
    return kExitOk;
  });
}

}  // namespace dlic::cli
