#include "qaes/container.hpp"

#include <cctype>
#include <cstdio>
#include <cstring>

namespace qaes {

namespace {

constexpr char kMagic[4] = {'Q', 'A', 'E', 'S'};
constexpr std::uint8_t kVersion = 1;

}  // namespace

std::uint8_t key_len_to_code(int key_len) {
  switch (key_len) {
    case 128: return 0;
    case 192: return 1;
    case 256: return 2;
    default: throw std::invalid_argument("unsupported key length");
  }
}

int key_len_from_code(std::uint8_t code) {
  switch (code) {
    case 0: return 128;
    case 1: return 192;
    case 2: return 256;
    default: throw FormatError("bad key length code");
  }
}

std::vector<std::uint8_t> encode_container(const ContainerHeader& header,
                                           const std::optional<SessionRecord>& record,
                                           std::span<const std::uint8_t> body) {
  if ((header.mode == QaesMode::online) != record.has_value())
    throw std::invalid_argument("session record is required exactly for online containers");

  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + (record ? kSessionRecordSize : 0) + body.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(header.mode));
  out.push_back(key_len_to_code(header.key_len));
  out.push_back(static_cast<std::uint8_t>(header.block_mode));
  out.insert(out.end(), header.nonce.begin(), header.nonce.end());
  out.insert(out.end(), 16, 0);
  put_u64be(out, body.size());
  if (record) {
    put_u64be(out, record->seed);
    put_u64be(out, record->config_digest);
  }
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Container decode_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw FormatError("container shorter than its header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad container magic");
  if (bytes[4] != kVersion)
    throw FormatError("unknown container version " + std::to_string(int(bytes[4])));
  if (bytes[5] > 1) throw FormatError("bad container mode");
  if (bytes[7] > 3) throw FormatError("bad container block mode");

  Container c;
  c.header.version = bytes[4];
  c.header.mode = static_cast<QaesMode>(bytes[5]);
  c.header.key_len = key_len_from_code(bytes[6]);
  c.header.block_mode = static_cast<BlockMode>(bytes[7]);
  std::memcpy(c.header.nonce.data(), bytes.data() + 8, 16);
  c.header.payload_len = get_u64be(bytes, 40);

  std::size_t pos = kHeaderSize;
  if (c.header.mode == QaesMode::online) {
    if (bytes.size() < pos + kSessionRecordSize)
      throw FormatError("online container missing its session record");
    SessionRecord rec;
    rec.seed = get_u64be(bytes, pos);
    rec.config_digest = get_u64be(bytes, pos + 8);
    c.record = rec;
    pos += kSessionRecordSize;
  }

  if (bytes.size() - pos != c.header.payload_len)
    throw FormatError("container body length does not match payload_len");
  c.body.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return c;
}

void write_key_file(const std::string& path, const KeyFile& kf) {
  char head[128];
  std::snprintf(head, sizeof(head), "# qaes key config=%016llx qber=%.6f bits=%zu\n",
                static_cast<unsigned long long>(kf.config_digest), kf.qber, kf.bits.size());
  std::string text = head;
  text += kf.bits.to_hex();
  text += '\n';
  write_text_file(path, text);
}

KeyFile read_key_file(const std::string& path) {
  const auto raw = read_file(path);
  const std::string text(raw.begin(), raw.end());

  const std::size_t eol = text.find('\n');
  if (eol == std::string::npos) throw FormatError("key file has no header line");
  const std::string head = text.substr(0, eol);

  KeyFile kf;
  unsigned long long digest = 0;
  double qber = 0.0;
  std::size_t bits = 0;
  if (std::sscanf(head.c_str(), "# qaes key config=%16llx qber=%lf bits=%zu", &digest, &qber,
                  &bits) != 3)
    throw FormatError("bad key file header line");
  kf.config_digest = digest;
  kf.qber = qber;

  std::string hex;
  for (std::size_t i = eol + 1; i < text.size(); ++i)
    if (!std::isspace(static_cast<unsigned char>(text[i]))) hex.push_back(text[i]);
  const auto bytes = from_hex(hex);
  if (bytes.size() != (bits + 7) / 8) throw FormatError("key file bit count does not match body");
  kf.bits = BitString::from_bytes(bytes).slice(0, bits);
  return kf;
}

}  // namespace qaes
