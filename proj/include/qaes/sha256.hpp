#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace qaes {

/// FIPS 180-4 SHA-256.
std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);

/// First 8 digest bytes as a big-endian integer. Used for key
/// confirmation and transcript lines.
std::uint64_t sha256_trunc64(std::span<const std::uint8_t> data);

}  // namespace qaes
