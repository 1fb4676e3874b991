#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qrng/source.hpp"

namespace qrng {

enum class Framing : std::uint8_t { raw, input_rounds, output_words };

/// Packed bit sequence. Bit i lives in word i / 64 at position i % 64, which
/// makes the byte image little-endian within bytes. Bits past size() are zero.
class BitStream {
 public:
  BitStream() = default;
  explicit BitStream(std::size_t bit_count, Framing framing = Framing::raw)
      : words_((bit_count + 63) / 64, 0), bits_(bit_count), framing_(framing) {}

  [[nodiscard]] std::size_t size() const noexcept { return bits_; }
  [[nodiscard]] bool empty() const noexcept { return bits_ == 0; }
  [[nodiscard]] Framing framing() const noexcept { return framing_; }
  void set_framing(Framing f) noexcept { framing_ = f; }

  [[nodiscard]] std::span<const std::uint64_t> words() const noexcept { return words_; }
  [[nodiscard]] std::span<std::uint64_t> words() noexcept { return words_; }

  [[nodiscard]] bool get(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1U; }
  void set(std::size_t i, bool v) noexcept {
    const std::uint64_t m = std::uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= m;
    else
      words_[i >> 6] &= ~m;
  }

  void push_back(bool v);
  /// Appends the low `nbits` of `value`, least significant first.
  void append(std::uint64_t value, unsigned nbits);
  void append(const BitStream& other);

  /// `nbits` (<= 64) starting at `pos`, least significant first; zero past the end.
  [[nodiscard]] std::uint64_t read(std::size_t pos, unsigned nbits) const noexcept;

  [[nodiscard]] BitStream slice(std::size_t first, std::size_t count) const;

  void reserve(std::size_t bit_count) { words_.reserve((bit_count + 63) / 64); }
  void truncate(std::size_t bit_count);

  [[nodiscard]] std::size_t popcount() const noexcept;

  [[nodiscard]] std::vector<std::uint8_t> to_bytes() const;
  [[nodiscard]] static BitStream from_bytes(std::span<const std::uint8_t> bytes, std::size_t bit_count);

  BitStream& operator^=(const BitStream& other);
  friend BitStream operator^(BitStream a, const BitStream& b) { return a ^= b; }

  /// Bit content only; framing is metadata.
  friend bool operator==(const BitStream& a, const BitStream& b) noexcept {
    return a.bits_ == b.bits_ && a.words_ == b.words_;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t bits_ = 0;
  Framing framing_ = Framing::raw;
};

inline constexpr unsigned kRoundBits = 24;

/// 24-bit round word: X in bits 0..11, P in bits 12..23, both two's complement.
[[nodiscard]] constexpr std::uint32_t round_word(std::int16_t x, std::int16_t p) noexcept {
  return (static_cast<std::uint32_t>(static_cast<std::uint16_t>(x)) & 0xFFFU) |
         ((static_cast<std::uint32_t>(static_cast<std::uint16_t>(p)) & 0xFFFU) << 12);
}

/// Round words of every unclipped round, in order.
[[nodiscard]] BitStream rounds_to_bits(const source::SampleBlock& block, bool drop_clipped = true);

}  // namespace qrng
