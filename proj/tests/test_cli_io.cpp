#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <filesystem>

#include "dlic/cli.hpp"
#include "dlic/verify.hpp"
#include "doctest.h"

using namespace dlic;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           fs::path("dlic_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const char* name) const { return (path / name).string(); }
};

LutSet small_luts() {
  LutConfig cfg;
  cfg.range = 8;
  return build_all_luts(cfg);
}

}  // namespace

TEST_CASE("model file: save(load(f)) is byte-identical") {
  const Model m = make_toy_model(1);
  const std::vector<uint8_t> a = serialize_model(m);
  const Model loaded = parse_model(a);
  const std::vector<uint8_t> b = serialize_model(loaded);
  CHECK(a == b);
}

TEST_CASE("float graph file round-trips byte-identically") {
  const FloatGraph g = make_toy_graph(2);
  const std::vector<uint8_t> a = serialize_float_graph(g);
  const FloatGraph loaded = parse_float_graph(a);
  const std::vector<uint8_t> b = serialize_float_graph(loaded);
  CHECK(a == b);
}

TEST_CASE("lut file round-trips byte-identically") {
  const LutSet luts = small_luts();
  const std::vector<uint8_t> a = serialize_luts(luts);
  const LutSet loaded = parse_luts(a);
  CHECK(loaded.entries == luts.entries);
  CHECK(loaded.config.range == luts.config.range);
  const std::vector<uint8_t> b = serialize_luts(loaded);
  CHECK(a == b);
}

TEST_CASE("container round-trips byte-identically") {
  const Model m = make_toy_model(1);
  const FloatGraph g = make_toy_graph(1);
  const LutSet luts = small_luts();
  auto [y, z] = make_symbol_pair(g, 10, 5, 5, 0.02);
  Container c;
  c.y_shape = y.shape;
  c.z_shape = z.shape;
  c.streams = encode_tensor(m, luts, y, z);
  const std::vector<uint8_t> a = serialize_container(c);
  const Container loaded = parse_container(a);
  const std::vector<uint8_t> b = serialize_container(loaded);
  CHECK(a == b);
}

TEST_CASE("corrupt files are rejected") {
  const Model m = make_toy_model(1);
  std::vector<uint8_t> bytes = serialize_model(m);

  SUBCASE("truncated") {
    bytes.pop_back();
    CHECK_THROWS_AS(parse_model(bytes), Error);
  }
  SUBCASE("bad magic") {
    bytes[0] ^= 0xFF;
    CHECK_THROWS_AS(parse_model(bytes), FormatError);
  }
  SUBCASE("bad version") {
    bytes[4] = 99;
    CHECK_THROWS_AS(parse_model(bytes), FormatError);
  }
  SUBCASE("flipped payload byte fails the checksum") {
    bytes[bytes.size() / 2] ^= 0x01;
    CHECK_THROWS_AS(parse_model(bytes), FormatError);
  }
  SUBCASE("trailing garbage") {
    bytes.push_back(0);
    CHECK_THROWS_AS(parse_model(bytes), Error);
  }
}

TEST_CASE("truncated container raises corruption") {
  const Model m = make_toy_model(1);
  const FloatGraph g = make_toy_graph(1);
  const LutSet luts = small_luts();
  auto [y, z] = make_symbol_pair(g, 11, 4, 4, 0.0);
  Container c;
  c.y_shape = y.shape;
  c.z_shape = z.shape;
  c.streams = encode_tensor(m, luts, y, z);
  std::vector<uint8_t> bytes = serialize_container(c);
  bytes.pop_back();
  CHECK_THROWS_AS(parse_container(bytes), CorruptionError);
}

TEST_CASE("a model/table pair fully determines the stream") {
  const Model m = make_toy_model(33);
  const LutSet luts = small_luts();
  const FloatGraph g = make_toy_graph(33);
  auto [y, z] = make_symbol_pair(g, 35, 6, 6, 0.01);
  const EncodedStreams direct = encode_tensor(m, luts, y, z);
  // the same pair reloaded through the file layer produces identical bytes
  const Model m2 = parse_model(serialize_model(m));
  const LutSet luts2 = parse_luts(serialize_luts(luts));
  const EncodedStreams reloaded = encode_tensor(m2, luts2, y, z);
  CHECK(direct.hyper == reloaded.hyper);
  CHECK(direct.main == reloaded.main);
  CHECK(direct.escape == reloaded.escape);
  CHECK(direct.escape_bits == reloaded.escape_bits);
}

TEST_CASE("coding path never reads the float weights") {
  Model m = make_toy_model(21);
  const FloatGraph g = make_toy_graph(21);
  const LutSet luts = small_luts();
  auto [y, z] = make_symbol_pair(g, 23, 6, 6, 0.01);
  const EncodedStreams ref = encode_tensor(m, luts, y, z);
  for (QuantLayer* l : {&m.hyper[0], &m.hyper[1], &m.context[0], &m.param[0],
                        &m.param[1]}) {
    std::fill(l->float_weights.begin(), l->float_weights.end(), 0.f);
    std::fill(l->float_bias.begin(), l->float_bias.end(), 0.f);
  }
  const EncodedStreams blanked = encode_tensor(m, luts, y, z);
  CHECK(ref.hyper == blanked.hyper);
  CHECK(ref.main == blanked.main);
  CHECK(ref.escape == blanked.escape);
}

TEST_CASE("symbols file round-trip and validation") {
  const FloatGraph g = make_toy_graph(3);
  auto [y, z] = make_symbol_pair(g, 31, 4, 4, 0.0);
  const std::vector<uint8_t> bytes = serialize_symbols(y, z);
  auto [ry, rz] = parse_symbols(bytes);
  CHECK(ry.data == y.data);
  CHECK(rz.data == z.data);
  CHECK(ry.shape == y.shape);

  std::vector<uint8_t> cut(bytes.begin(), bytes.end() - 3);
  CHECK_THROWS_AS(parse_symbols(cut), CorruptionError);
}

TEST_CASE("calibration report JSON round-trip") {
  const FloatGraph g = make_toy_graph(4);
  const auto batch = make_calibration_batch(g, 44, 2, 6, 6);
  const CalibrationReport rep = calibrate(g, batch);
  const CalibrationReport back = report_from_json(report_to_json(rep));
  CHECK(back.feature_min == rep.feature_min);
  CHECK(back.feature_max == rep.feature_max);
  REQUIRE(back.hyper.size() == rep.hyper.size());
  for (size_t i = 0; i < rep.hyper.size(); ++i) {
    CHECK(back.hyper[i].weight_scales == rep.hyper[i].weight_scales);
    CHECK(back.hyper[i].out_min == rep.hyper[i].out_min);
    CHECK(back.hyper[i].out_max == rep.hyper[i].out_max);
  }
  // a model quantized from the round-tripped report is identical
  CHECK(serialize_model(quantize_graph(g, rep)) ==
        serialize_model(quantize_graph(g, back)));
}

TEST_CASE("calibration ingestion: ordering and error paths") {
  TempDir dir;
  const FloatGraph g = make_toy_graph(5);

  SUBCASE("empty directory") {
    CHECK_THROWS_AS(ingest_calibration(dir.path.string()), Error);
  }

  SUBCASE("pairs come back in filename order") {
    auto batch = make_calibration_batch(g, 50, 3, 4, 4);
    batch[0].y.data[0] = 111.f;
    batch[2].y.data[0] = 333.f;
    write_calibration_dir(dir.path.string(), batch);
    const auto loaded = ingest_calibration(dir.path.string());
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[0].y.data[0] == 111.f);
    CHECK(loaded[2].y.data[0] == 333.f);
    CHECK(loaded[1].y.data == batch[1].y.data);
  }

  SUBCASE("payload size mismatch") {
    auto batch = make_calibration_batch(g, 1, 4, 4, 4);
    write_calibration_dir(dir.path.string(), batch);
    // shrink one payload behind the manifest's back
    const auto files = fs::directory_iterator(dir.path);
    for (const auto& e : files)
      if (e.path().extension() == ".bin") {
        fs::resize_file(e.path(), fs::file_size(e.path()) - 4);
        break;
      }
    CHECK_THROWS_AS(ingest_calibration(dir.path.string()), FormatError);
  }
}

TEST_CASE("random byte flips never escape the error types") {
  const Model m = make_toy_model(8);
  const FloatGraph g = make_toy_graph(8);
  const LutSet luts = small_luts();
  auto [y, z] = make_symbol_pair(g, 80, 4, 4, 0.01);
  Container c;
  c.y_shape = y.shape;
  c.z_shape = z.shape;
  c.streams = encode_tensor(m, luts, y, z);
  const std::vector<uint8_t> model_bytes = serialize_model(m);
  const std::vector<uint8_t> container_bytes = serialize_container(c);

  std::mt19937_64 rng(808);
  for (int trial = 0; trial < 200; ++trial) {
    // model files carry a checksum: every flip must be rejected
    std::vector<uint8_t> mb = model_bytes;
    mb[rng() % mb.size()] ^= uint8_t(1 + rng() % 255);
    CHECK_THROWS_AS(parse_model(mb), Error);

    // containers must either decode to something or raise a typed error,
    // never crash or hang
    std::vector<uint8_t> cb = container_bytes;
    cb[rng() % cb.size()] ^= uint8_t(1 + rng() % 255);
    try {
      const Container parsed = parse_container(cb);
      (void)decode_tensor(m, luts, parsed.streams, parsed.y_shape, parsed.z_shape);
    } catch (const Error&) {
    }
  }
}

TEST_CASE("verify report is deterministic for a fixed seed") {
  const Model m = make_toy_model(6);
  const LutSet luts = small_luts();
  VerifyOptions opts;
  opts.seed = 99;
  opts.count = 6;
  opts.thread_counts = {1, 2};
  opts.height = 4;
  opts.width = 4;
  const VerifyReport a = run_verify(m, luts, opts);
  const VerifyReport b = run_verify(m, luts, opts);
  CHECK(a.ok());
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("cli commands: full pipeline on files") {
  TempDir dir;
  using namespace dlic::cli;

  GenArgs gen;
  gen.seed = 77;
  gen.out_model = dir.file("toy.dlif");
  gen.out_calib = dir.file("calib");
  gen.out_symbols = dir.file("sym.dlsy");
  gen.height = gen.width = 5;
  REQUIRE(cmd_gen(gen) == kExitOk);

  CalibrateArgs cal{dir.file("toy.dlif"), dir.file("calib"), dir.file("report.json")};
  REQUIRE(cmd_calibrate(cal) == kExitOk);

  QuantizeArgs qnt{dir.file("toy.dlif"), dir.file("report.json"),
                   dir.file("model.dlicm")};
  REQUIRE(cmd_quantize(qnt) == kExitOk);

  BuildLutsArgs bl;
  bl.range = 16;
  bl.out = dir.file("tables.dlut");
  REQUIRE(cmd_build_luts(bl) == kExitOk);

  EncodeArgs enc{dir.file("model.dlicm"), dir.file("tables.dlut"),
                 dir.file("sym.dlsy"), dir.file("out.dlic")};
  REQUIRE(cmd_encode(enc) == kExitOk);

  DecodeArgs dec{dir.file("model.dlicm"), dir.file("tables.dlut"),
                 dir.file("out.dlic"), dir.file("back.dlsy")};
  REQUIRE(cmd_decode(dec) == kExitOk);

  // bit-exact symbol recovery through the file layer
  auto [y0, z0] = parse_symbols(read_file(dir.file("sym.dlsy")));
  auto [y1, z1] = parse_symbols(read_file(dir.file("back.dlsy")));
  CHECK(y0.data == y1.data);
  CHECK(z0.data == z1.data);

  // a truncated container must fail with the format/corruption exit code
  auto bytes = read_file(dir.file("out.dlic"));
  bytes.pop_back();
  write_file(dir.file("cut.dlic"), bytes);
  DecodeArgs bad{dir.file("model.dlicm"), dir.file("tables.dlut"),
                 dir.file("cut.dlic"), dir.file("bad.dlsy")};
  CHECK(cmd_decode(bad) == kExitFormat);

  VerifyArgs ver;
  ver.model = dir.file("model.dlicm");
  ver.luts = dir.file("tables.dlut");
  ver.seed = 5;
  ver.corpus_size = 4;
  ver.threads = 2;
  CHECK(cmd_verify(ver) == kExitOk);
}
