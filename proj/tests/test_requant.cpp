#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "dlic/requant.hpp"
#include "doctest.h"

using namespace dlic;

namespace {

// 64-bit reference for the dyadic rescale: round to nearest, ties away.
int64_t rid_oracle(int64_t v, int shift) {
  const int64_t half = int64_t(1) << (shift - 1);
  if (v >= 0) return (v + half) >> shift;
  return -((-v + half) >> shift);
}

RequantParams derive(float m, int bits, int32_t out_zero = 0,
                     std::optional<float> slope = {}) {
  // w_scale * in_scale / out_scale == m with unit helper scales
  return derive_requant(m, 1.f, 1.f, out_zero, bits, slope);
}

}  // namespace

TEST_CASE("derive_requant fixed points") {
  {
    auto p = derive(0.5f, 8);
    CHECK(p.shift == 24);
    CHECK(p.mul == 8388608);
    CHECK(p.clip_hi == 254);
    CHECK(p.clip_lo == -256);
  }
  {
    auto p = derive(1.f, 8);
    CHECK(p.mul == 16777216);
    CHECK(p.clip_hi == 127);
    CHECK(p.clip_lo == -128);
  }
  {
    auto p = derive(0.5f, 8, 10);
    CHECK(p.pre_zero == 20);
  }
  {
    auto p = derive(0.5f, 16);
    CHECK(p.shift == 16);
    CHECK(p.mul == 32768);
  }
}

TEST_CASE("derive_requant error paths") {
  CHECK_THROWS_AS(derive_requant(-1.f, 1.f, 1.f, 0, 8), QuantizerError);
  CHECK_THROWS_AS(derive_requant(1.f, 1.f, 1.f, 0, 12), ArgumentError);
  // factor at/above 2^(B-1) cannot carry information at B bits
  CHECK_THROWS_AS(derive(128.f, 8), DegenerateError);
  // factor below the dyadic resolution floors the multiplier to zero
  CHECK_THROWS_AS(derive(1e-9f, 8), DegenerateError);
}

TEST_CASE("round_int_div_pow2 matches the 64-bit oracle") {
  // ties away from zero on both sides, exact multiples untouched
  CHECK(round_int_div_pow2(3, 1) == 2);
  CHECK(round_int_div_pow2(-3, 1) == -2);
  CHECK(round_int_div_pow2(2, 1) == 1);
  CHECK(round_int_div_pow2(-2, 1) == -1);
  CHECK(round_int_div_pow2(-1, 1) == -1);
  CHECK(round_int_div_pow2(INT32_MIN, 24) == -128);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 200000; ++i) {
    const int32_t v = int32_t(rng());
    const int shift = 1 + int(rng() % 31);
    CHECK(round_int_div_pow2(v, shift) == rid_oracle(v, shift));
  }
}

TEST_CASE("requantize fixed points") {
  const auto p = derive(0.5f, 8);
  CHECK(requantize_one(100, p) == 50);  // 100*8388608 / 2^24 exactly
  CHECK(requantize_one(0, p) == 0);
  // clip-before-scale: huge accumulation clips to 254, then 254*m0/2^24 = 127
  CHECK(requantize_one(1000000, p) == 127);
}

TEST_CASE("requantize_leaky branches on the accumulation sign") {
  const auto p = derive(0.5f, 8, 0, 0.25f);
  REQUIRE(p.neg_mul.has_value());
  CHECK(*p.neg_mul == 2097152);  // floor(2^24 * 0.125)
  CHECK(requantize_leaky_one(-64, p) == -8);
  CHECK(requantize_leaky_one(64, p) == 32);
  CHECK(requantize_leaky_one(0, p) == 0);  // boundary takes the positive branch

  const auto no_neg = derive(0.5f, 8);
  std::vector<int32_t> in{1}, out(1);
  CHECK_THROWS_AS(requantize_leaky(in, no_neg, out), ContractError);
}

TEST_CASE("leaky branch selection depends only on the sign") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const float m = 0.01f + float(rng() % 10000) / 2500.f;
    const auto p = derive(m, 8, 0, 0.125f);
    const int32_t acc = int32_t(rng() % 4096) - 2048;
    const int32_t got = requantize_leaky_one(acc, p);
    const int32_t expect =
        acc >= 0 ? requantize_one(acc, p)
                 : [&] {
                     RequantParams q = p;
                     q.mul = *p.neg_mul;
                     return requantize_one(acc, q);
                   }();
    CHECK(got == expect);
  }
}

TEST_CASE("overflow freedom at the clip corners and random operands") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 20000; ++i) {
    // log-uniform factor across the legal band
    const double expo = -14.0 + 20.0 * double(rng() % 100000) / 100000.0;
    const double m = std::exp2(expo);
    const int bits = (rng() & 1) ? 8 : 16;
    if (m >= std::exp2(bits - 1)) continue;
    RequantParams p;
    try {
      p = derive(float(m), bits);
    } catch (const DegenerateError&) {
      continue;
    }
    for (const int64_t q : {int64_t(p.clip_lo), int64_t(p.clip_hi), int64_t(0),
                            int64_t(1), int64_t(-1)}) {
      const int64_t wide = int64_t(p.mul) * q;
      CHECK(wide >= INT32_MIN);
      CHECK(wide <= INT32_MAX);
      CHECK(int64_t(int32_t(wide)) == wide);
    }
    const int64_t span = int64_t(p.clip_hi) - p.clip_lo + 1;
    const int64_t q = p.clip_lo + int64_t(rng() % uint64_t(span));
    const int64_t wide = int64_t(p.mul) * q;
    CHECK(int64_t(int32_t(wide)) == wide);
  }
}

TEST_CASE("dyadic approximation stays within one step of the real rescale") {
  std::mt19937_64 rng(23);
  size_t equal = 0, n = 0;
  for (int i = 0; i < 100000; ++i) {
    const double m = 0.01 + 3.99 * double(rng() % 1000000) / 1000000.0;
    const auto p = derive(float(m), 8);
    const int64_t span = int64_t(p.clip_hi) - p.clip_lo + 1;
    const int32_t q = int32_t(p.clip_lo + int64_t(rng() % uint64_t(span)));
    const int32_t got = round_int_div_pow2(int32_t(int64_t(p.mul) * q), p.shift);
    const int64_t want = std::llround(double(p.scale) * q);
    CHECK(std::abs(int64_t(got) - want) <= 1);
    equal += (int64_t(got) == want);
    ++n;
  }
  CHECK(double(equal) / double(n) >= 0.99);
}

TEST_CASE("requantize is monotone in the accumulation") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const double m = 0.01 + 7.99 * double(rng() % 100000) / 100000.0;
    const auto p = derive(float(m), 8, int32_t(rng() % 32) - 16);
    int32_t prev = requantize_one(-1000000, p);
    for (int32_t acc = -1000; acc <= 1000; acc += 7) {
      const int32_t cur = requantize_one(acc, p);
      CHECK(cur >= prev);
      prev = cur;
    }
  }
}
