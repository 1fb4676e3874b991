#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace qrng {

using Digest = std::array<std::uint8_t, 32>;

/// SHA-256.
[[nodiscard]] Digest sha256(std::span<const std::uint8_t> data);
[[nodiscard]] Digest sha256(std::string_view text);
[[nodiscard]] Digest sha256_file(const std::filesystem::path& path);

[[nodiscard]] std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace qrng
