#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "qrng/bitstream.hpp"

namespace qrng::extractor {

struct ToeplitzConfig {
  std::size_t j = 1272;    // output bits per invocation
  std::size_t k_in = 2880; // input bits per invocation
  std::size_t b = 24;      // word width, bits per round
  std::size_t n_s = 20;    // rounds per clock on the input bus
  std::size_t n_b = 20;    // parallel blocks

  /// b | j, b | k_in, j <= k_in, n_b = n_s; throws ValidationError.
  void validate() const;

  [[nodiscard]] std::size_t seed_bits() const noexcept { return j + k_in - 1; }
  [[nodiscard]] std::size_t rounds_per_invocation() const noexcept { return k_in / b; }
  [[nodiscard]] std::size_t output_words() const noexcept { return j / b; }
};

/// Reads a seed file of raw bits (little-endian within bytes). The file must
/// hold at least j + k_in - 1 bits; with `compat`, at least j + k_in bits and
/// the last one is ignored.
[[nodiscard]] BitStream read_seed_file(const std::filesystem::path& path, const ToeplitzConfig& cfg,
                                       bool compat = false);

/// Deterministic public seed for tests and the golden harness.
[[nodiscard]] BitStream make_seed(std::size_t bits, std::uint64_t key);

void write_bits_file(const std::filesystem::path& path, const BitStream& bits);

/// r[row] = XOR_col T[row][col] & x[col], T[row][col] = seed[row + k_in - 1 - col].
[[nodiscard]] BitStream toeplitz_reference(const BitStream& input, const ToeplitzConfig& cfg,
                                           const BitStream& seed);

/// Ext(a ^ b) == Ext(a) ^ Ext(b).
[[nodiscard]] bool toeplitz_linear_check(const ToeplitzConfig& cfg, const BitStream& seed,
                                         const BitStream& a, const BitStream& b);

/// Reference applied to each whole k_in frame; a trailing partial frame is dropped.
[[nodiscard]] BitStream extract_reference(const BitStream& input, const ToeplitzConfig& cfg,
                                          const BitStream& seed);

/// Whole frames only; never pads.
[[nodiscard]] BitStream frame_align(const BitStream& input, const ToeplitzConfig& cfg);

void check_seed(const ToeplitzConfig& cfg, const BitStream& seed);

}  // namespace qrng::extractor
