#include "qaes/frame.hpp"

namespace qaes {

const char* to_string(FrameTag tag) {
  switch (tag) {
    case FrameTag::hello: return "HELLO";
    case FrameTag::qbatch: return "QBATCH";
    case FrameTag::bases: return "BASES";
    case FrameTag::sift_idx: return "SIFT_IDX";
    case FrameTag::qber_sample: return "QBER_SAMPLE";
    case FrameTag::key_confirm: return "KEY_CONFIRM";
    case FrameTag::params: return "PARAMS";
    case FrameTag::data: return "DATA";
    case FrameTag::abort_session: return "ABORT";
    case FrameTag::bye: return "BYE";
  }
  return "?";
}

namespace {

bool valid_tag(std::uint8_t t) {
  return t >= static_cast<std::uint8_t>(FrameTag::hello) &&
         t <= static_cast<std::uint8_t>(FrameTag::bye);
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  if (f.payload.size() > kMaxFramePayload) throw FormatError("frame payload exceeds 1 MiB");
  std::vector<std::uint8_t> out;
  out.reserve(5 + f.payload.size());
  put_u32be(out, static_cast<std::uint32_t>(f.payload.size()));
  out.push_back(static_cast<std::uint8_t>(f.tag));
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

Frame decode_frame(std::span<const std::uint8_t> buf, std::size_t& pos) {
  if (buf.size() - pos < 5) throw FormatError("truncated frame header");
  const std::uint32_t len = get_u32be(buf, pos);
  if (len > kMaxFramePayload) throw FormatError("frame payload exceeds 1 MiB");
  const std::uint8_t tag = buf[pos + 4];
  if (!valid_tag(tag)) throw FormatError("unknown frame tag " + std::to_string(int(tag)));
  if (buf.size() - pos - 5 < len) throw FormatError("truncated frame payload");
  Frame f;
  f.tag = static_cast<FrameTag>(tag);
  f.payload.assign(buf.begin() + static_cast<std::ptrdiff_t>(pos + 5),
                   buf.begin() + static_cast<std::ptrdiff_t>(pos + 5 + len));
  pos += 5 + len;
  return f;
}

std::vector<std::uint8_t> pack_qubits(std::span<const Qubit> qubits) {
  std::vector<std::uint8_t> out((qubits.size() + 3) / 4, 0);
  for (std::size_t i = 0; i < qubits.size(); ++i) {
    const unsigned pair = static_cast<unsigned>((qubits[i].bit & 1) | ((qubits[i].basis & 1) << 1));
    out[i / 4] |= static_cast<std::uint8_t>(pair << (2 * (i % 4)));
  }
  return out;
}

std::vector<Qubit> unpack_qubits(std::span<const std::uint8_t> bytes, std::size_t count) {
  if (bytes.size() < (count + 3) / 4) throw FormatError("qubit batch shorter than its count");
  std::vector<Qubit> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned pair = (bytes[i / 4] >> (2 * (i % 4))) & 3u;
    out[i].bit = static_cast<std::uint8_t>(pair & 1);
    out[i].basis = static_cast<std::uint8_t>((pair >> 1) & 1);
  }
  return out;
}

}  // namespace qaes
