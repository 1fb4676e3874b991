#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "qrng/bitstream.hpp"

namespace qrng::testutil {

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline BitStream random_bits(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  BitStream b(n);
  for (auto& w : b.words()) w = g();
  b.truncate(n);
  return b;
}

}  // namespace qrng::testutil
