#include "qrng/bitstream.hpp"

#include <bit>

#include "qrng/error.hpp"

namespace qrng {

void BitStream::push_back(bool v) {
  if ((bits_ & 63) == 0) words_.push_back(0);
  if (v) words_[bits_ >> 6] |= std::uint64_t{1} << (bits_ & 63);
  ++bits_;
}

void BitStream::append(std::uint64_t value, unsigned nbits) {
  if (nbits == 0) return;
  if (nbits < 64) value &= (std::uint64_t{1} << nbits) - 1;
  const unsigned off = bits_ & 63;
  if (off == 0) {
    words_.push_back(value);
  } else {
    words_.back() |= value << off;
    if (off + nbits > 64) words_.push_back(value >> (64 - off));
  }
  bits_ += nbits;
}

void BitStream::append(const BitStream& other) {
  const std::size_t full = other.bits_ / 64;
  for (std::size_t w = 0; w < full; ++w) append(other.words_[w], 64);
  const unsigned rest = other.bits_ & 63;
  if (rest) append(other.words_[full], rest);
}

std::uint64_t BitStream::read(std::size_t pos, unsigned nbits) const noexcept {
  if (nbits == 0 || pos >= bits_) return 0;
  const std::size_t w = pos >> 6;
  const unsigned off = pos & 63;
  std::uint64_t v = words_[w] >> off;
  if (off && w + 1 < words_.size()) v |= words_[w + 1] << (64 - off);
  if (nbits < 64) v &= (std::uint64_t{1} << nbits) - 1;
  return v;
}

BitStream BitStream::slice(std::size_t first, std::size_t count) const {
  if (first + count > bits_) throw ValidationError("bit slice out of range");
  BitStream out;
  out.framing_ = framing_;
  out.reserve(count);
  std::size_t pos = first;
  while (count >= 64) {
    out.append(read(pos, 64), 64);
    pos += 64;
    count -= 64;
  }
  if (count) out.append(read(pos, static_cast<unsigned>(count)), static_cast<unsigned>(count));
  return out;
}

void BitStream::truncate(std::size_t bit_count) {
  if (bit_count > bits_) return;
  bits_ = bit_count;
  words_.resize((bit_count + 63) / 64);
  if (bit_count & 63) words_.back() &= (std::uint64_t{1} << (bit_count & 63)) - 1;
}

std::size_t BitStream::popcount() const noexcept {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::vector<std::uint8_t> BitStream::to_bytes() const {
  std::vector<std::uint8_t> out((bits_ + 7) / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(words_[i >> 3] >> ((i & 7) * 8));
  }
  return out;
}

BitStream BitStream::from_bytes(std::span<const std::uint8_t> bytes, std::size_t bit_count) {
  if (bit_count > bytes.size() * 8) throw ValidationError("bit count exceeds byte buffer");
  BitStream s(bit_count);
  const std::size_t nbytes = (bit_count + 7) / 8;
  for (std::size_t i = 0; i < nbytes; ++i) {
    s.words_[i >> 3] |= static_cast<std::uint64_t>(bytes[i]) << ((i & 7) * 8);
  }
  if (bit_count & 63) s.words_.back() &= (std::uint64_t{1} << (bit_count & 63)) - 1;
  return s;
}

BitStream& BitStream::operator^=(const BitStream& other) {
  if (other.bits_ != bits_) throw ValidationError("XOR of bit streams with different lengths");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= other.words_[i];
  return *this;
}

BitStream rounds_to_bits(const source::SampleBlock& block, bool drop_clipped) {
  BitStream out;
  out.set_framing(Framing::input_rounds);
  out.reserve(block.round_count() * kRoundBits);
  for (std::size_t i = 0; i < block.round_count(); ++i) {
    if (drop_clipped && block.clip_mask[i]) continue;
    out.append(round_word(block.codes_x[i], block.codes_p[i]), kRoundBits);
  }
  return out;
}

}  // namespace qrng
