#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace qrng {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Output is a pure function of (key, counter), so any index range of a
/// stream can be generated independently and in any order.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  [[nodiscard]] Counter operator()(Counter ctr) const noexcept;

  /// Four words for block `index` of sub-stream `stream`.
  [[nodiscard]] Counter block(std::uint64_t index, std::uint32_t stream) const noexcept {
    return (*this)({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    stream, 0x51a7e5edU});
  }

 private:
  Key key_;
};

/// Uniform double in (0, 1) from 64 random bits; never returns 0 or 1.
[[nodiscard]] inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Pair of independent standard normals for block `index` of `stream`.
[[nodiscard]] std::pair<double, double> gaussian_pair(const Philox4x32& gen, std::uint64_t index,
                                                      std::uint32_t stream) noexcept;

/// Sequential convenience wrapper for test harnesses and bootstrap draws.
class PhiloxEngine {
 public:
  using result_type = std::uint32_t;

  explicit PhiloxEngine(std::uint64_t seed, std::uint32_t stream = 0) noexcept
      : gen_(seed), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xffffffffU; }

  result_type operator()() noexcept {
    if (pos_ == 4) {
      buf_ = gen_.block(index_++, stream_);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  double uniform() noexcept {
    const auto hi = (*this)();
    const auto lo = (*this)();
    return to_open_unit(hi, lo);
  }

  double normal() noexcept;

  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  Philox4x32 gen_;
  std::uint32_t stream_;
  std::uint64_t index_ = 0;
  Philox4x32::Counter buf_{};
  int pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qrng
