#include "qrng/toeplitz.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <vector>

#include "qrng/error.hpp"
#include "qrng/philox.hpp"

namespace qrng::extractor {

void ToeplitzConfig::validate() const {
  if (j == 0 || k_in == 0 || b == 0) throw ValidationError("Toeplitz dimensions must be positive");
  if (b > 64) throw ValidationError("word width b must be <= 64");
  if (j % b != 0) throw ValidationError("word width b must divide j");
  if (k_in % b != 0) throw ValidationError("word width b must divide k_in");
  if (j > k_in) throw ValidationError("j must not exceed k_in");
  if (n_s == 0 || n_b == 0) throw ValidationError("n_s and n_b must be positive");
  if (n_b != n_s) throw ValidationError("n_b must equal n_s");
}

void check_seed(const ToeplitzConfig& cfg, const BitStream& seed) {
  if (seed.size() != cfg.seed_bits()) {
    throw ValidationError("seed length " + std::to_string(seed.size()) + " != j + k_in - 1 = " +
                          std::to_string(cfg.seed_bits()));
  }
}

BitStream read_seed_file(const std::filesystem::path& path, const ToeplitzConfig& cfg, bool compat) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open seed file " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), {}};
  const std::size_t need = cfg.seed_bits() + (compat ? 1 : 0);
  if (bytes.size() * 8 < need) {
    throw ValidationError("seed file " + path.string() + " holds " + std::to_string(bytes.size() * 8) +
                          " bits, need " + std::to_string(need));
  }
  return BitStream::from_bytes(bytes, cfg.seed_bits());
}

BitStream make_seed(std::size_t bits, std::uint64_t key) {
  PhiloxEngine eng(key, 0x5eedU);
  BitStream s;
  s.reserve(bits);
  while (s.size() + 32 <= bits) s.append(eng(), 32);
  if (s.size() < bits) s.append(eng(), static_cast<unsigned>(bits - s.size()));
  return s;
}

void write_bits_file(const std::filesystem::path& path, const BitStream& bits) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const auto bytes = bits.to_bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on " + path.string());
}

BitStream toeplitz_reference(const BitStream& input, const ToeplitzConfig& cfg, const BitStream& seed) {
  if (cfg.j == 0 || cfg.k_in == 0) throw ValidationError("Toeplitz dimensions must be positive");
  if (input.size() != cfg.k_in) throw ValidationError("reference input must hold exactly k_in bits");
  check_seed(cfg, seed);

  // Row r is seed[r + k_in - 1 - c] over c, i.e. the reversed seed R read
  // forward from j - 1 - r.
  const std::size_t len = seed.size();
  BitStream rev(len);
  for (std::size_t t = 0; t < len; ++t) rev.set(t, seed.get(len - 1 - t));

  const auto x = input.words();
  BitStream out(cfg.j, Framing::output_words);
  for (std::size_t r = 0; r < cfg.j; ++r) {
    const std::size_t start = cfg.j - 1 - r;
    std::uint64_t acc = 0;
    std::size_t c = 0;
    for (std::size_t w = 0; c < cfg.k_in; ++w, c += 64) {
      const unsigned n = static_cast<unsigned>(std::min<std::size_t>(64, cfg.k_in - c));
      acc ^= rev.read(start + c, n) & x[w];
    }
    out.set(r, std::popcount(acc) & 1);
  }
  return out;
}

bool toeplitz_linear_check(const ToeplitzConfig& cfg, const BitStream& seed, const BitStream& a,
                           const BitStream& b) {
  if (a.size() != b.size()) throw ValidationError("linear check needs equal-length inputs");
  return toeplitz_reference(a ^ b, cfg, seed) ==
         (toeplitz_reference(a, cfg, seed) ^ toeplitz_reference(b, cfg, seed));
}

BitStream frame_align(const BitStream& input, const ToeplitzConfig& cfg) {
  const std::size_t frames = input.size() / cfg.k_in;
  BitStream out = input;
  out.truncate(frames * cfg.k_in);
  return out;
}

BitStream extract_reference(const BitStream& input, const ToeplitzConfig& cfg, const BitStream& seed) {
  BitStream out;
  out.set_framing(Framing::output_words);
  const std::size_t frames = input.size() / cfg.k_in;
  out.reserve(frames * cfg.j);
  for (std::size_t f = 0; f < frames; ++f) {
    out.append(toeplitz_reference(input.slice(f * cfg.k_in, cfg.k_in), cfg, seed));
  }
  return out;
}

}  // namespace qrng::extractor
