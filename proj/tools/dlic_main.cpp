#include <cstdio>

#include "CLI11.hpp"
#include "dlic/cli.hpp"

int main(int argc, char** argv) {
  using namespace dlic::cli;

  CLI::App app{"dlic: deterministic integer entropy-coding engine"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* c_gen = app.add_subcommand("gen", "generate a toy float graph and data");
  c_gen->add_option("--seed", gen.seed);
  c_gen->add_option("--out-model", gen.out_model);
  c_gen->add_option("--out-calib", gen.out_calib);
  c_gen->add_option("--out-symbols", gen.out_symbols);
  c_gen->add_option("--height", gen.height);
  c_gen->add_option("--width", gen.width);
  c_gen->add_option("--calib-count", gen.calib_count);

  CalibrateArgs cal;
  CLI::App* c_cal = app.add_subcommand("calibrate", "gather quantizer statistics");
  c_cal->add_option("--model", cal.model)->required();
  c_cal->add_option("--data", cal.data)->required();
  c_cal->add_option("--out", cal.out)->required();

  QuantizeArgs qnt;
  CLI::App* c_qnt = app.add_subcommand("quantize", "produce an integer model");
  c_qnt->add_option("--model", qnt.model)->required();
  c_qnt->add_option("--report", qnt.report)->required();
  c_qnt->add_option("--out", qnt.out)->required();

  BuildLutsArgs bl;
  CLI::App* c_bl = app.add_subcommand("build-luts", "build the CDF table set");
  c_bl->add_option("--R", bl.range);
  c_bl->add_option("--out", bl.out)->required();

  EncodeArgs enc;
  CLI::App* c_enc = app.add_subcommand("encode", "encode a symbol file");
  c_enc->add_option("--model", enc.model)->required();
  c_enc->add_option("--luts", enc.luts)->required();
  c_enc->add_option("--symbols", enc.symbols)->required();
  c_enc->add_option("--out", enc.out)->required();

  DecodeArgs dec;
  CLI::App* c_dec = app.add_subcommand("decode", "decode a bitstream container");
  c_dec->add_option("--model", dec.model)->required();
  c_dec->add_option("--luts", dec.luts)->required();
  c_dec->add_option("--in", dec.input)->required();
  c_dec->add_option("--out", dec.out)->required();

  VerifyArgs ver;
  CLI::App* c_ver = app.add_subcommand("verify", "cross-configuration determinism check");
  c_ver->add_option("--model", ver.model)->required();
  c_ver->add_option("--luts", ver.luts)->required();
  c_ver->add_option("--seed", ver.seed);
  c_ver->add_option("--corpus-size", ver.corpus_size);
  c_ver->add_option("--threads", ver.threads);
  c_ver->add_option("--dump", ver.dump_dir);
  c_ver->add_option("--report", ver.report_out);

  BenchArgs ben;
  CLI::App* c_ben = app.add_subcommand("bench-discretize",
                                       "time the sigma discretizer variants");
  c_ben->add_option("--n", ben.n);
  c_ben->add_option("--seed", ben.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (c_gen->parsed()) return cmd_gen(gen);
  if (c_cal->parsed()) return cmd_calibrate(cal);
  if (c_qnt->parsed()) return cmd_quantize(qnt);
  if (c_bl->parsed()) return cmd_build_luts(bl);
  if (c_enc->parsed()) return cmd_encode(enc);
  if (c_dec->parsed()) return cmd_decode(dec);
  if (c_ver->parsed()) return cmd_verify(ver);
  if (c_ben->parsed()) return cmd_bench(ben);
  return kExitUsage;
}
