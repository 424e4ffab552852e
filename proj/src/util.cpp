#include "qaes/util.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace qaes {

namespace {

int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::string to_hex(std::span<const std::uint8_t> data) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

std::vector<std::uint8_t> from_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) throw FormatError("hex string has odd length");
  std::vector<std::uint8_t> out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_nibble(hex[i]);
    int lo = hex_nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw FormatError("invalid hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : data) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& text) {
  return fnv1a64(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes) {
  BitString bs;
  bs.bytes_.assign(bytes.begin(), bytes.end());
  bs.nbits_ = bytes.size() * 8;
  return bs;
}

void BitString::append_bit(int bit) {
  if (nbits_ % 8 == 0) bytes_.push_back(0);
  if (bit) bytes_.back() |= static_cast<std::uint8_t>(1u << (7 - nbits_ % 8));
  ++nbits_;
}

void BitString::append(const BitString& other) {
  if (nbits_ % 8 == 0) {
    bytes_.insert(bytes_.end(), other.bytes_.begin(), other.bytes_.end());
    nbits_ += other.nbits_;
    return;
  }
  for (std::size_t i = 0; i < other.nbits_; ++i) append_bit(other.bit(i));
}

int BitString::bit(std::size_t i) const {
  return (bytes_[i / 8] >> (7 - i % 8)) & 1;
}

std::vector<std::uint8_t> BitString::to_bytes() const {
  if (nbits_ % 8 != 0) throw Error("bit count is not a whole number of bytes");
  return bytes_;
}

BitString BitString::slice(std::size_t pos, std::size_t n) const {
  if (pos + n > nbits_) throw Error("bit slice out of range");
  BitString out;
  if (pos % 8 == 0) {
    std::size_t nbytes = (n + 7) / 8;
    out.bytes_.assign(bytes_.begin() + pos / 8, bytes_.begin() + pos / 8 + nbytes);
    out.nbits_ = n;
    if (n % 8 != 0) out.bytes_.back() &= static_cast<std::uint8_t>(0xff00u >> (n % 8));
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out.append_bit(bit(pos + i));
  return out;
}

std::string BitString::to_hex() const { return qaes::to_hex(bytes_); }

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw FormatError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  return data;
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open file for writing: " + path);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw FormatError("write failed: " + path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open file for writing: " + path);
  out << text;
  if (!out) throw FormatError("write failed: " + path);
}

void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u64be(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8)
    out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t get_u32be(std::span<const std::uint8_t> in, std::size_t pos) {
  if (pos + 4 > in.size()) throw FormatError("truncated u32 field");
  return (std::uint32_t(in[pos]) << 24) | (std::uint32_t(in[pos + 1]) << 16) |
         (std::uint32_t(in[pos + 2]) << 8) | std::uint32_t(in[pos + 3]);
}

std::uint64_t get_u64be(std::span<const std::uint8_t> in, std::size_t pos) {
  if (pos + 8 > in.size()) throw FormatError("truncated u64 field");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | in[pos + i];
  return v;
}

}  // namespace qaes
