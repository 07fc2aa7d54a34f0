#include "dlic/coder.hpp"

#include <bit>

namespace dlic {

namespace {

inline void check_interval(uint32_t cum_lo, uint32_t cum_hi, uint32_t total) {
  if (total == 0 || total > (uint32_t(1) << 26))
    throw ContractError("range coder: total out of range");
  if (cum_lo >= cum_hi) throw ContractError("range coder: zero-width interval");
  if (cum_hi > total) throw ContractError("range coder: interval exceeds total");
}

}  // namespace

void RangeEncoder::shift_low() {
  out_.push_back(uint8_t(low_ >> 56));
  low_ <<= 8;
}

void RangeEncoder::propagate_carry() {
  // The emitted prefix is a big-endian integer; a carry out of the low
  // register increments it. It cannot run off the front: the coded value
  // never outgrows the digits already emitted.
  for (size_t i = out_.size(); i-- > 0;) {
    if (++out_[i] != 0) break;
  }
}

void RangeEncoder::encode(uint32_t cum_lo, uint32_t cum_hi, uint32_t total) {
  check_interval(cum_lo, cum_hi, total);
  while (range_ < kRenorm) {
    shift_low();
    range_ <<= 8;
  }
  const uint64_t slice = range_ / total;
  const uint64_t add = slice * cum_lo;
  const uint64_t nl = low_ + add;
  if (nl < low_) propagate_carry();
  low_ = nl;
  range_ = slice * (cum_hi - cum_lo);
}

std::vector<uint8_t> RangeEncoder::finish() {
  // Emit the smallest 5-byte-aligned code value inside [low, low+range).
  // After any encode the range is at least 2^56/2^26 = 2^30, so rounding low
  // up at the 2^24 granule stays inside the interval; the decoder's implicit
  // trailing zeros reproduce the dropped bytes exactly.
  const uint64_t granule = uint64_t(1) << 24;
  const uint64_t add = (granule - (low_ & (granule - 1))) & (granule - 1);
  const uint64_t code = low_ + add;
  if (code < low_) propagate_carry();
  low_ = code;
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes) : in_(bytes) {
  for (int i = 0; i < 8; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  return pos_ < in_.size() ? in_[pos_++] : uint8_t(0);
}

void RangeDecoder::renorm() {
  while (range_ < kRenorm) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

uint32_t RangeDecoder::decode_target(uint32_t total) {
  if (pending_update_) throw ContractError("range coder: decode_update skipped");
  if (total == 0 || total > (uint32_t(1) << 26))
    throw ContractError("range coder: total out of range");
  renorm();
  slice_ = range_ / total;
  uint64_t target = code_ / slice_;
  if (target >= total) target = total - 1;
  pending_update_ = true;
  return uint32_t(target);
}

void RangeDecoder::decode_update(uint32_t cum_lo, uint32_t cum_hi, uint32_t total) {
  check_interval(cum_lo, cum_hi, total);
  if (!pending_update_) throw ContractError("range coder: decode_target skipped");
  pending_update_ = false;
  code_ -= slice_ * cum_lo;
  range_ = slice_ * (cum_hi - cum_lo);
}

void BitWriter::write_bit(uint32_t bit) {
  const uint64_t offset = bits_ & 7;
  if (offset == 0) bytes_.push_back(0);
  if (bit & 1u) bytes_.back() |= uint8_t(0x80u >> offset);
  ++bits_;
}

void BitWriter::write_bits(uint64_t value, int count) {
  for (int i = count - 1; i >= 0; --i) write_bit(uint32_t(value >> i) & 1u);
}

BitReader::BitReader(std::span<const uint8_t> bytes, uint64_t bit_count)
    : bytes_(bytes), bit_count_(bit_count) {
  if (bit_count > uint64_t(bytes.size()) * 8)
    throw CorruptionError("BitReader: bit count exceeds payload");
}

uint32_t BitReader::read_bit() {
  if (pos_ >= bit_count_) throw CorruptionError("BitReader: escape section underrun");
  const uint8_t byte = bytes_[size_t(pos_ >> 3)];
  const uint32_t bit = (byte >> (7 - (pos_ & 7))) & 1u;
  ++pos_;
  return bit;
}

void golomb_encode(BitWriter& w, int32_t value) {
  const int64_t v = value;
  const uint64_t u = v >= 0 ? uint64_t(v) * 2 : uint64_t(-v) * 2 - 1;
  const int width = std::bit_width(u + 1);
  for (int i = 0; i < width - 1; ++i) w.write_bit(0);
  w.write_bits(u + 1, width);
}

int32_t golomb_decode(BitReader& r) {
  int zeros = 0;
  while (r.read_bit() == 0) {
    if (++zeros > 33) throw CorruptionError("golomb_decode: malformed prefix");
  }
  uint64_t value = 1;
  for (int i = 0; i < zeros; ++i) value = (value << 1) | r.read_bit();
  const uint64_t u = value - 1;
  const int64_t v = (u & 1) ? -int64_t((u + 1) / 2) : int64_t(u / 2);
  if (v < INT32_MIN || v > INT32_MAX)
    throw CorruptionError("golomb_decode: value out of 32-bit range");
  return int32_t(v);
}

}  // namespace dlic
