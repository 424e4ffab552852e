#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qaes/qaes_modes.hpp"
#include "qaes/util.hpp"

namespace qaes {

/// 48-byte file header:
///   "QAES" | version u8 | mode u8 | key_len_code u8 | block_mode u8 |
///   nonce[16] | reserved[16] (zero) | payload_len u64be
/// Online containers carry a 16-byte session record after the header
/// (session seed u64be, key-source config digest u64be) so a decryptor
/// can replay the key stream.
struct ContainerHeader {
  std::uint8_t version = 1;
  QaesMode mode = QaesMode::offline;
  int key_len = 128;
  BlockMode block_mode = BlockMode::ctr;
  Block nonce{};
  std::uint64_t payload_len = 0;
};

struct SessionRecord {
  std::uint64_t seed = 0;           // 0 when the source was a key file
  std::uint64_t config_digest = 0;  // digest of the key source
};

inline constexpr std::size_t kHeaderSize = 48;
inline constexpr std::size_t kSessionRecordSize = 16;

struct Container {
  ContainerHeader header;
  std::optional<SessionRecord> record;  // present iff header.mode == online
  std::vector<std::uint8_t> body;
};

std::uint8_t key_len_to_code(int key_len);     // throws std::invalid_argument
int key_len_from_code(std::uint8_t code);      // throws FormatError

std::vector<std::uint8_t> encode_container(const ContainerHeader& header,
                                           const std::optional<SessionRecord>& record,
                                           std::span<const std::uint8_t> body);

/// Throws FormatError on bad magic, unknown version, bad field codes,
/// or a body shorter/longer than payload_len.
Container decode_container(std::span<const std::uint8_t> bytes);

/// Key file: one comment header line
///   # qaes key config=<hex16> qber=<float> bits=<count>
/// followed by the packed key bits in hex.
struct KeyFile {
  std::uint64_t config_digest = 0;
  double qber = 0.0;
  BitString bits;
};

void write_key_file(const std::string& path, const KeyFile& kf);
KeyFile read_key_file(const std::string& path);  // throws FormatError

}  // namespace qaes
