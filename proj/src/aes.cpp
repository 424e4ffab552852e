#include "qaes/aes.hpp"

#include <cstring>
#include <stdexcept>

namespace qaes {

namespace {

// FIPS-197 forward box.
constexpr SboxTable kSbox = {
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b,
    0xfe, 0xd7, 0xab, 0x76, 0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0,
    0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0, 0xb7, 0xfd, 0x93, 0x26,
    0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2,
    0xeb, 0x27, 0xb2, 0x75, 0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0,
    0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84, 0x53, 0xd1, 0x00, 0xed,
    0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f,
    0x50, 0x3c, 0x9f, 0xa8, 0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5,
    0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2, 0xcd, 0x0c, 0x13, 0xec,
    0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14,
    0xde, 0x5e, 0x0b, 0xdb, 0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c,
    0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79, 0xe7, 0xc8, 0x37, 0x6d,
    0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f,
    0x4b, 0xbd, 0x8b, 0x8a, 0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e,
    0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e, 0xe1, 0xf8, 0x98, 0x11,
    0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f,
    0xb0, 0x54, 0xbb, 0x16};

constexpr std::array<std::uint8_t, 10> kRcon = {0x01, 0x02, 0x04, 0x08, 0x10,
                                                0x20, 0x40, 0x80, 0x1b, 0x36};

std::uint8_t xtime(std::uint8_t a) {
  return static_cast<std::uint8_t>((a << 1) ^ ((a & 0x80) ? 0x1b : 0x00));
}

void sub_bytes(Block& s, const SboxTable& box) {
  for (auto& b : s) b = box[b];
}

// Row r rotates left by r; state index is r + 4c.
void shift_rows(Block& s) {
  Block t = s;
  for (int r = 1; r < 4; ++r)
    for (int c = 0; c < 4; ++c) s[r + 4 * c] = t[r + 4 * ((c + r) & 3)];
}

void inv_shift_rows(Block& s) {
  Block t = s;
  for (int r = 1; r < 4; ++r)
    for (int c = 0; c < 4; ++c) s[r + 4 * ((c + r) & 3)] = t[r + 4 * c];
}

void mix_columns(Block& s) {
  for (int c = 0; c < 4; ++c) gf::mix_column(&s[4 * c]);
}

void inv_mix_columns(Block& s) {
  for (int c = 0; c < 4; ++c) gf::inv_mix_column(&s[4 * c]);
}

void add_round_key(Block& s, const Block& rk) {
  for (int i = 0; i < 16; ++i) s[i] ^= rk[i];
}

const SboxTable& box_for_round(std::span<const SboxTable* const> boxes, int round) {
  const SboxTable* p = boxes[static_cast<std::size_t>(round - 1)];
  if (p == nullptr) throw std::invalid_argument("null S-box for round");
  return *p;
}

Block encrypt_core(const Block& plain, const RoundKeySet& rks,
                   std::span<const SboxTable* const> boxes) {
  const int nr = static_cast<int>(rks.size()) - 1;
  if (nr < 1) throw std::invalid_argument("round key set too small");
  if (boxes.size() != static_cast<std::size_t>(nr))
    throw std::invalid_argument("expected one S-box per round");

  Block s = plain;
  add_round_key(s, rks.keys[0]);
  for (int round = 1; round < nr; ++round) {
    sub_bytes(s, box_for_round(boxes, round));
    shift_rows(s);
    mix_columns(s);
    add_round_key(s, rks.keys[static_cast<std::size_t>(round)]);
  }
  sub_bytes(s, box_for_round(boxes, nr));
  shift_rows(s);
  add_round_key(s, rks.keys[static_cast<std::size_t>(nr)]);
  return s;
}

Block decrypt_core(const Block& cipher, const RoundKeySet& rks,
                   std::span<const SboxTable* const> inv_boxes) {
  const int nr = static_cast<int>(rks.size()) - 1;
  if (nr < 1) throw std::invalid_argument("round key set too small");
  if (inv_boxes.size() != static_cast<std::size_t>(nr))
    throw std::invalid_argument("expected one inverse S-box per round");

  Block s = cipher;
  add_round_key(s, rks.keys[static_cast<std::size_t>(nr)]);
  for (int round = nr - 1; round >= 1; --round) {
    inv_shift_rows(s);
    sub_bytes(s, box_for_round(inv_boxes, round + 1));
    add_round_key(s, rks.keys[static_cast<std::size_t>(round)]);
    inv_mix_columns(s);
  }
  inv_shift_rows(s);
  sub_bytes(s, box_for_round(inv_boxes, 1));
  add_round_key(s, rks.keys[0]);
  return s;
}

constexpr int kMaxRounds = 14;

std::span<const SboxTable* const> same_box_span(
    std::array<const SboxTable*, kMaxRounds>& storage, const SboxTable& box, int nr) {
  storage.fill(&box);
  return {storage.data(), static_cast<std::size_t>(nr)};
}

}  // namespace

CipherParams params_for_key_len(int bits) {
  switch (bits) {
    case 128: return {4, 4, 10};
    case 192: return {6, 4, 12};
    case 256: return {8, 4, 14};
    default: throw std::invalid_argument("unsupported key length");
  }
}

const SboxTable& standard_sbox() { return kSbox; }

const SboxTable& standard_inverse_sbox() {
  static const SboxTable inv = [] {
    SboxTable t{};
    for (int i = 0; i < 256; ++i) t[kSbox[static_cast<std::size_t>(i)]] = static_cast<std::uint8_t>(i);
    return t;
  }();
  return inv;
}

RoundKeySet expand_key(std::span<const std::uint8_t> key, const CipherParams& params) {
  if (key.size() != static_cast<std::size_t>(4 * params.nk))
    throw std::invalid_argument("key length does not match cipher parameters");

  const int nwords = 4 * (params.nr + 1);
  std::vector<std::array<std::uint8_t, 4>> w(static_cast<std::size_t>(nwords));
  for (int i = 0; i < params.nk; ++i)
    std::memcpy(w[static_cast<std::size_t>(i)].data(), key.data() + 4 * i, 4);

  for (int i = params.nk; i < nwords; ++i) {
    std::array<std::uint8_t, 4> t = w[static_cast<std::size_t>(i - 1)];
    if (i % params.nk == 0) {
      std::array<std::uint8_t, 4> rot = {t[1], t[2], t[3], t[0]};
      for (auto& b : rot) b = kSbox[b];
      rot[0] ^= kRcon[static_cast<std::size_t>(i / params.nk - 1)];
      t = rot;
    } else if (params.nk > 6 && i % params.nk == 4) {
      for (auto& b : t) b = kSbox[b];
    }
    for (int j = 0; j < 4; ++j)
      t[static_cast<std::size_t>(j)] ^= w[static_cast<std::size_t>(i - params.nk)][static_cast<std::size_t>(j)];
    w[static_cast<std::size_t>(i)] = t;
  }

  RoundKeySet rks;
  rks.keys.resize(static_cast<std::size_t>(params.nr + 1));
  for (int r = 0; r <= params.nr; ++r)
    for (int c = 0; c < 4; ++c)
      std::memcpy(&rks.keys[static_cast<std::size_t>(r)][static_cast<std::size_t>(4 * c)],
                  w[static_cast<std::size_t>(4 * r + c)].data(), 4);
  return rks;
}

Block encrypt_block(const Block& plain, const RoundKeySet& rks, const SboxTable& sbox) {
  std::array<const SboxTable*, kMaxRounds> storage;
  return encrypt_core(plain, rks, same_box_span(storage, sbox, static_cast<int>(rks.size()) - 1));
}

Block decrypt_block(const Block& cipher, const RoundKeySet& rks, const SboxTable& inv_sbox) {
  std::array<const SboxTable*, kMaxRounds> storage;
  return decrypt_core(cipher, rks, same_box_span(storage, inv_sbox, static_cast<int>(rks.size()) - 1));
}

Block encrypt_block(const Block& plain, const RoundKeySet& rks,
                    std::span<const SboxTable* const> round_boxes) {
  return encrypt_core(plain, rks, round_boxes);
}

Block decrypt_block(const Block& cipher, const RoundKeySet& rks,
                    std::span<const SboxTable* const> round_inv_boxes) {
  return decrypt_core(cipher, rks, round_inv_boxes);
}

namespace gf {

std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
  std::uint8_t acc = 0;
  while (b) {
    if (b & 1) acc ^= a;
    a = xtime(a);
    b >>= 1;
  }
  return acc;
}

void mix_column(std::uint8_t col[4]) {
  const std::uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
  col[0] = static_cast<std::uint8_t>(xtime(a0) ^ xtime(a1) ^ a1 ^ a2 ^ a3);
  col[1] = static_cast<std::uint8_t>(a0 ^ xtime(a1) ^ xtime(a2) ^ a2 ^ a3);
  col[2] = static_cast<std::uint8_t>(a0 ^ a1 ^ xtime(a2) ^ xtime(a3) ^ a3);
  col[3] = static_cast<std::uint8_t>(xtime(a0) ^ a0 ^ a1 ^ a2 ^ xtime(a3));
}

void inv_mix_column(std::uint8_t col[4]) {
  const std::uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
  col[0] = static_cast<std::uint8_t>(mul(a0, 0x0e) ^ mul(a1, 0x0b) ^ mul(a2, 0x0d) ^ mul(a3, 0x09));
  col[1] = static_cast<std::uint8_t>(mul(a0, 0x09) ^ mul(a1, 0x0e) ^ mul(a2, 0x0b) ^ mul(a3, 0x0d));
  col[2] = static_cast<std::uint8_t>(mul(a0, 0x0d) ^ mul(a1, 0x09) ^ mul(a2, 0x0e) ^ mul(a3, 0x0b));
  col[3] = static_cast<std::uint8_t>(mul(a0, 0x0b) ^ mul(a1, 0x0d) ^ mul(a2, 0x09) ^ mul(a3, 0x0e));
}

}  // namespace gf

}  // namespace qaes
