#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "qrng/bitstream.hpp"
#include "qrng/digest.hpp"
#include "qrng/toeplitz.hpp"

namespace qrng::extractor {

/// Extracted-bits container.
///
///   0  magic "QRNGEXT1"
///   8  version u16, flags u16
///  12  j u32, k_in u32, b u16, n_b u16
///  24  seed SHA-256 (32 bytes)
///  56  payload bit count u64
///  64  certificate SHA-256 (32 bytes), certificate length u32, certificate text
///  ..  payload, packed little-endian within bytes
///
/// All integers little-endian.
inline constexpr std::size_t kExtHeaderBytes = 64;
inline constexpr std::uint16_t kExtVersion = 1;
inline constexpr std::uint16_t kExtFlagCertified = 1;

struct ExtractedFile {
  std::uint16_t version = kExtVersion;
  std::uint16_t flags = 0;
  ToeplitzConfig cfg;
  Digest seed_digest{};
  Digest certificate_digest{};
  std::string certificate;
  BitStream payload;

  [[nodiscard]] bool certified() const noexcept { return (flags & kExtFlagCertified) != 0; }
};

void write_extracted(const std::filesystem::path& path, const ExtractedFile& file);

/// Throws IoError on malformed files and when the embedded certificate does
/// not hash to the stored digest.
[[nodiscard]] ExtractedFile read_extracted(const std::filesystem::path& path);

/// Headerless packed payload for external test suites.
void export_raw(const std::filesystem::path& path, const BitStream& bits);

}  // namespace qrng::extractor
