#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qrng/bitstream.hpp"
#include "qrng/toeplitz.hpp"

namespace qrng::extractor {

/// Software throughput engine. Frames are dealt round-robin to n_b logical
/// blocks exactly as the daisy chain does; `workers` threads process blocks
/// and output is collated in block-index order, so the result does not depend
/// on the worker count.
class ParallelExtractor {
 public:
  ParallelExtractor(const ToeplitzConfig& cfg, const BitStream& seed, unsigned workers = 1);

  /// Whole frames of `input` only; a trailing partial frame is dropped.
  [[nodiscard]] BitStream extract(const BitStream& input) const;

  /// One frame into `out` (j bits worth of words, rows in order).
  void extract_frame(const BitStream& input, std::size_t first_bit, std::uint64_t* out) const;

  [[nodiscard]] const ToeplitzConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] unsigned workers() const noexcept { return workers_; }

 private:
  ToeplitzConfig cfg_;
  unsigned workers_;
  std::size_t row_words_;
  // For each 8-column group g: 256 precomputed XOR combinations of its columns.
  std::vector<std::uint64_t> tables_;
};

struct ThroughputResult {
  std::uint64_t input_bits = 0;
  std::uint64_t output_bits = 0;
  double seconds = 0.0;
  double input_rate = 0.0;   // bit/s
  double output_rate = 0.0;  // bit/s
  double ratio = 0.0;        // output / input
};

/// Runs the engine over at least `input_bits` of pseudorandom input.
[[nodiscard]] ThroughputResult throughput_bench(const ToeplitzConfig& cfg, const BitStream& seed,
                                                std::uint64_t input_bits, unsigned workers);

}  // namespace qrng::extractor
