#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qaes {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a key stream cannot serve the requested number of bits.
/// The caller is expected to run a fresh BB84 session for more material.
class KeyDepletionError : public Error {
 public:
  using Error::Error;
};

/// Malformed external input: files, frames, fixtures, configs.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A row with max == min cannot be standardized (zero spread).
class DegenerateRowError : public Error {
 public:
  using Error::Error;
};

std::string to_hex(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> from_hex(const std::string& hex);  // throws FormatError

std::uint64_t fnv1a64(std::span<const std::uint8_t> data);
std::uint64_t fnv1a64(const std::string& text);

/// Ordered bit sequence packed MSB-first (bit i lives in byte i/8 at
/// position 7 - i%8). Trailing pad bits of the last byte are kept zero,
/// so equal BitStrings compare equal bytewise.
class BitString {
 public:
  BitString() = default;

  static BitString from_bytes(std::span<const std::uint8_t> bytes);

  void append_bit(int bit);
  void append(const BitString& other);

  int bit(std::size_t i) const;
  std::size_t size() const { return nbits_; }
  bool empty() const { return nbits_ == 0; }

  /// Requires size() % 8 == 0.
  std::vector<std::uint8_t> to_bytes() const;

  BitString slice(std::size_t pos, std::size_t n) const;

  const std::vector<std::uint8_t>& data() const { return bytes_; }
  std::string to_hex() const;

  bool operator==(const BitString& other) const = default;

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t nbits_ = 0;
};

/// Parses "key = value" lines. '#' starts a comment, blank lines are
/// skipped, whitespace around keys and values is trimmed.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> load_key_values(const std::string& path);

std::vector<std::uint8_t> read_file(const std::string& path);   // throws FormatError
void write_file(const std::string& path, std::span<const std::uint8_t> data);
void write_text_file(const std::string& path, const std::string& text);

void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64be(std::vector<std::uint8_t>& out, std::uint64_t v);
std::uint32_t get_u32be(std::span<const std::uint8_t> in, std::size_t pos);
std::uint64_t get_u64be(std::span<const std::uint8_t> in, std::size_t pos);

}  // namespace qaes
