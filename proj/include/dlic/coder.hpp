#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dlic/error.hpp"

namespace dlic {

// Byte-renormalized range coder. Registers are 64-bit so that per-position
// totals up to 2^26 (four mixture components at full weight) always satisfy
// range/total >= 2^30 after renormalization; carries propagate into the
// emitted byte buffer. Encode and decode renormalize at the same points, so
// the interval sequence is reproduced exactly on both sides.
class RangeEncoder {
 public:
  // Narrows the current interval to [cum_lo, cum_hi) of total.
  // Requires 0 <= cum_lo < cum_hi <= total.
  void encode(uint32_t cum_lo, uint32_t cum_hi, uint32_t total);

  // Flushes the final interval; the encoder must not be reused afterwards.
  std::vector<uint8_t> finish();

 private:
  static constexpr uint64_t kRenorm = uint64_t(1) << 56;

  void shift_low();
  void propagate_carry();

  std::vector<uint8_t> out_;
  uint64_t low_ = 0;
  uint64_t range_ = ~uint64_t(0);
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> bytes);

  // Returns a cumulate v with cum_lo <= v < cum_hi for the symbol encoded
  // next; must be followed by decode_update with the located interval.
  uint32_t decode_target(uint32_t total);
  void decode_update(uint32_t cum_lo, uint32_t cum_hi, uint32_t total);

 private:
  static constexpr uint64_t kRenorm = uint64_t(1) << 56;

  uint8_t next_byte();
  void renorm();

  std::span<const uint8_t> in_;
  size_t pos_ = 0;
  uint64_t code_ = 0;
  uint64_t range_ = ~uint64_t(0);
  uint64_t slice_ = 0;  // range/total between target and update
  bool pending_update_ = false;
};

// MSB-first bit buffer for the escape section.
class BitWriter {
 public:
  void write_bit(uint32_t bit);
  void write_bits(uint64_t value, int count);  // MSB first

  uint64_t bit_count() const { return bits_; }
  const std::vector<uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<uint8_t> bytes_;
  uint64_t bits_ = 0;
};

class BitReader {
 public:
  BitReader(std::span<const uint8_t> bytes, uint64_t bit_count);

  uint32_t read_bit();

 private:
  std::span<const uint8_t> bytes_;
  uint64_t bit_count_ = 0;
  uint64_t pos_ = 0;
};

// Signed escape values as order-0 exponential-Golomb over the zigzag map
// 0,-1,1,-2,2 -> 0,1,2,3,4.
void golomb_encode(BitWriter& w, int32_t value);
int32_t golomb_decode(BitReader& r);

}  // namespace dlic
