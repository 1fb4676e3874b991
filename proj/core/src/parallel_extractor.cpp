#include "qrng/parallel_extractor.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <thread>

#include "qrng/error.hpp"
#include "qrng/philox.hpp"

namespace qrng::extractor {

ParallelExtractor::ParallelExtractor(const ToeplitzConfig& cfg, const BitStream& seed, unsigned workers)
    : cfg_(cfg), workers_(std::max(1U, workers)), row_words_((cfg.j + 63) / 64) {
  if (cfg.j == 0 || cfg.k_in == 0) throw ValidationError("Toeplitz dimensions must be positive");
  check_seed(cfg, seed);

  // Column c (rows 0..j-1) is seed[r + k_in - 1 - c] over r.
  const std::size_t groups = (cfg.k_in + 7) / 8;
  std::vector<std::uint64_t> cols(cfg.k_in * row_words_, 0);
  for (std::size_t c = 0; c < cfg.k_in; ++c) {
    std::uint64_t* col = &cols[c * row_words_];
    for (std::size_t r = 0; r < cfg.j; ++r) {
      if (seed.get(r + cfg.k_in - 1 - c)) col[r >> 6] |= std::uint64_t{1} << (r & 63);
    }
  }
  tables_.assign(groups * 256 * row_words_, 0);
  for (std::size_t g = 0; g < groups; ++g) {
    std::uint64_t* t = &tables_[g * 256 * row_words_];
    for (unsigned v = 1; v < 256; ++v) {
      // Gray-style build: entry v = entry (v without its lowest bit) ^ column.
      const unsigned low = static_cast<unsigned>(std::countr_zero(v));
      const unsigned prev = v & (v - 1);
      const std::size_t c = g * 8 + low;
      std::uint64_t* dst = t + v * row_words_;
      const std::uint64_t* src = t + prev * row_words_;
      if (c < cfg.k_in) {
        const std::uint64_t* col = &cols[c * row_words_];
        for (std::size_t k = 0; k < row_words_; ++k) dst[k] = src[k] ^ col[k];
      } else {
        std::copy(src, src + row_words_, dst);
      }
    }
  }
}

void ParallelExtractor::extract_frame(const BitStream& input, std::size_t first_bit, std::uint64_t* out) const {
  std::fill(out, out + row_words_, 0);
  const std::size_t groups = (cfg_.k_in + 7) / 8;
  for (std::size_t g = 0; g < groups; ++g) {
    const unsigned n = static_cast<unsigned>(std::min<std::size_t>(8, cfg_.k_in - g * 8));
    const auto v = static_cast<unsigned>(input.read(first_bit + g * 8, n));
    if (v == 0) continue;
    const std::uint64_t* t = &tables_[(g * 256 + v) * row_words_];
    for (std::size_t k = 0; k < row_words_; ++k) out[k] ^= t[k];
  }
}

BitStream ParallelExtractor::extract(const BitStream& input) const {
  const std::size_t frames = input.size() / cfg_.k_in;
  std::vector<std::uint64_t> rows(frames * row_words_);
  const std::size_t nb = cfg_.n_b;

  // Worker w owns logical blocks w, w + W, ...; block k owns frames k, k + n_b, ...
  auto run_worker = [&](unsigned w) {
    for (std::size_t blk = w; blk < nb; blk += workers_) {
      for (std::size_t f = blk; f < frames; f += nb) {
        extract_frame(input, f * cfg_.k_in, &rows[f * row_words_]);
      }
    }
  };
  if (workers_ == 1) {
    run_worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers_; ++w) pool.emplace_back(run_worker, w);
  }

  // Collation in block-index order per round equals frame order.
  BitStream out;
  out.set_framing(Framing::output_words);
  out.reserve(frames * cfg_.j);
  const std::size_t full = cfg_.j / 64;
  const unsigned rest = static_cast<unsigned>(cfg_.j % 64);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::uint64_t* r = &rows[f * row_words_];
    for (std::size_t k = 0; k < full; ++k) out.append(r[k], 64);
    if (rest) out.append(r[full], rest);
  }
  return out;
}

ThroughputResult throughput_bench(const ToeplitzConfig& cfg, const BitStream& seed, std::uint64_t input_bits,
                                  unsigned workers) {
  cfg.validate();
  const ParallelExtractor ex(cfg, seed, workers);
  const std::uint64_t frames = std::max<std::uint64_t>(1, (input_bits + cfg.k_in - 1) / cfg.k_in);
  BitStream in;
  in.reserve(frames * cfg.k_in);
  PhiloxEngine eng(0xbe7cULL);
  while (in.size() + 32 <= frames * cfg.k_in) in.append(eng(), 32);
  if (in.size() < frames * cfg.k_in) in.append(eng(), static_cast<unsigned>(frames * cfg.k_in - in.size()));

  const auto t0 = std::chrono::steady_clock::now();
  const BitStream out = ex.extract(in);
  const auto t1 = std::chrono::steady_clock::now();

  ThroughputResult r;
  r.input_bits = in.size();
  r.output_bits = out.size();
  r.seconds = std::chrono::duration<double>(t1 - t0).count();
  r.input_rate = r.seconds > 0 ? static_cast<double>(r.input_bits) / r.seconds : 0.0;
  r.output_rate = r.seconds > 0 ? static_cast<double>(r.output_bits) / r.seconds : 0.0;
  r.ratio = static_cast<double>(r.output_bits) / static_cast<double>(r.input_bits);
  return r;
}

}  // namespace qrng::extractor
