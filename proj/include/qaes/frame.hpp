#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qaes/bb84.hpp"
#include "qaes/util.hpp"

namespace qaes {

enum class FrameTag : std::uint8_t {
  hello = 1,
  qbatch = 2,
  bases = 3,
  sift_idx = 4,
  qber_sample = 5,
  key_confirm = 6,
  params = 7,
  data = 8,
  abort_session = 9,
  bye = 10,
};

const char* to_string(FrameTag tag);

/// Wire unit of both channels: 4-byte big-endian payload length, one
/// tag byte, payload. Reliable in-order delivery is assumed.
struct Frame {
  FrameTag tag = FrameTag::hello;
  std::vector<std::uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

inline constexpr std::size_t kMaxFramePayload = 1 << 20;

std::vector<std::uint8_t> encode_frame(const Frame& f);

/// Decodes one frame starting at `pos`, advancing it past the frame.
/// Throws FormatError on truncation, oversize length or unknown tag.
Frame decode_frame(std::span<const std::uint8_t> buf, std::size_t& pos);

/// Qubits travel packed two bits each, LSB-first within a byte:
/// bit 0 of the pair is the value, bit 1 the basis.
std::vector<std::uint8_t> pack_qubits(std::span<const Qubit> qubits);
std::vector<Qubit> unpack_qubits(std::span<const std::uint8_t> bytes, std::size_t count);

}  // namespace qaes
