#include "reference_aes.hpp"

#include <cstring>
#include <stdexcept>

namespace refaes {

namespace {

struct Field {
  std::uint8_t alog[256];
  std::uint8_t lg[256];
  Field() {
    std::uint8_t x = 1;
    for (int i = 0; i < 255; ++i) {
      alog[i] = x;
      lg[x] = static_cast<std::uint8_t>(i);
      std::uint8_t doubled = static_cast<std::uint8_t>(x << 1);
      if (x & 0x80) doubled ^= 0x1b;
      x = static_cast<std::uint8_t>(x ^ doubled);  // x *= 3, a generator
    }
    alog[255] = alog[0];
  }
};

const Field& field() {
  static const Field f;
  return f;
}

std::uint8_t gmul(std::uint8_t a, std::uint8_t b) {
  if (a == 0 || b == 0) return 0;
  const auto& f = field();
  return f.alog[(f.lg[a] + f.lg[b]) % 255];
}

std::uint8_t ginv(std::uint8_t a) {
  if (a == 0) return 0;
  const auto& f = field();
  return f.alog[(255 - f.lg[a]) % 255];
}

std::uint8_t affine(std::uint8_t s) {
  std::uint8_t r = 0;
  for (int i = 0; i < 8; ++i) {
    const int bit = ((s >> i) ^ (s >> ((i + 4) & 7)) ^ (s >> ((i + 5) & 7)) ^
                     (s >> ((i + 6) & 7)) ^ (s >> ((i + 7) & 7)) ^ (0x63 >> i)) &
                    1;
    r = static_cast<std::uint8_t>(r | (bit << i));
  }
  return r;
}

using Box = std::array<std::uint8_t, 256>;

Box invert_box(const Box& box) {
  Box inv{};
  for (int i = 0; i < 256; ++i) inv[box[i]] = static_cast<std::uint8_t>(i);
  return inv;
}

int rounds_for(std::size_t key_bytes) {
  switch (key_bytes) {
    case 16: return 10;
    case 24: return 12;
    case 32: return 14;
    default: throw std::invalid_argument("reference AES: bad key size");
  }
}

// Round keys as 4-byte columns, schedule per the standard construction.
struct Schedule {
  std::uint8_t w[60][4];  // up to (14+1)*4 words
  int nr;
};

Schedule key_schedule(const std::uint8_t* key, std::size_t key_bytes) {
  const Box std_box = sbox();
  Schedule ks{};
  ks.nr = rounds_for(key_bytes);
  const int nk = static_cast<int>(key_bytes / 4);
  const int total = 4 * (ks.nr + 1);

  for (int i = 0; i < nk; ++i)
    for (int j = 0; j < 4; ++j) ks.w[i][j] = key[4 * i + j];

  std::uint8_t rcon = 1;
  for (int i = nk; i < total; ++i) {
    std::uint8_t t[4];
    std::memcpy(t, ks.w[i - 1], 4);
    if (i % nk == 0) {
      const std::uint8_t head = t[0];
      t[0] = static_cast<std::uint8_t>(std_box[t[1]] ^ rcon);
      t[1] = std_box[t[2]];
      t[2] = std_box[t[3]];
      t[3] = std_box[head];
      rcon = gmul(rcon, 2);
    } else if (nk > 6 && i % nk == 4) {
      for (auto& b : t) b = std_box[b];
    }
    for (int j = 0; j < 4; ++j) ks.w[i][j] = static_cast<std::uint8_t>(ks.w[i - nk][j] ^ t[j]);
  }
  return ks;
}

// st[row][col]; input byte i lands at st[i%4][i/4].
using State = std::uint8_t[4][4];

void load(State st, const std::uint8_t* in) {
  for (int i = 0; i < 16; ++i) st[i % 4][i / 4] = in[i];
}

void store(const State st, std::uint8_t* out) {
  for (int i = 0; i < 16; ++i) out[i] = st[i % 4][i / 4];
}

void add_round_key(State st, const Schedule& ks, int round) {
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) st[r][c] ^= ks.w[4 * round + c][r];
}

void sub_bytes(State st, const Box& box) {
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) st[r][c] = box[st[r][c]];
}

void shift_rows(State st) {
  for (int r = 1; r < 4; ++r) {
    std::uint8_t tmp[4];
    for (int c = 0; c < 4; ++c) tmp[c] = st[r][(c + r) & 3];
    std::memcpy(st[r], tmp, 4);
  }
}

void inv_shift_rows(State st) {
  for (int r = 1; r < 4; ++r) {
    std::uint8_t tmp[4];
    for (int c = 0; c < 4; ++c) tmp[(c + r) & 3] = st[r][c];
    std::memcpy(st[r], tmp, 4);
  }
}

void mix_columns(State st) {
  for (int c = 0; c < 4; ++c) {
    std::uint8_t a[4];
    for (int r = 0; r < 4; ++r) a[r] = st[r][c];
    for (int r = 0; r < 4; ++r)
      st[r][c] = static_cast<std::uint8_t>(gmul(a[r], 2) ^ gmul(a[(r + 1) & 3], 3) ^
                                           a[(r + 2) & 3] ^ a[(r + 3) & 3]);
  }
}

void inv_mix_columns(State st) {
  for (int c = 0; c < 4; ++c) {
    std::uint8_t a[4];
    for (int r = 0; r < 4; ++r) a[r] = st[r][c];
    for (int r = 0; r < 4; ++r)
      st[r][c] = static_cast<std::uint8_t>(gmul(a[r], 14) ^ gmul(a[(r + 1) & 3], 11) ^
                                           gmul(a[(r + 2) & 3], 13) ^ gmul(a[(r + 3) & 3], 9));
  }
}

}  // namespace

Box sbox() {
  Box box;
  for (int i = 0; i < 256; ++i) box[i] = affine(ginv(static_cast<std::uint8_t>(i)));
  return box;
}

std::array<std::uint8_t, 16> encrypt(const std::uint8_t* key, std::size_t key_bytes,
                                     const std::uint8_t* plaintext, const Box* box) {
  const Box table = box ? *box : sbox();
  const Schedule ks = key_schedule(key, key_bytes);

  State st;
  load(st, plaintext);
  add_round_key(st, ks, 0);
  for (int round = 1; round < ks.nr; ++round) {
    sub_bytes(st, table);
    shift_rows(st);
    mix_columns(st);
    add_round_key(st, ks, round);
  }
  sub_bytes(st, table);
  shift_rows(st);
  add_round_key(st, ks, ks.nr);

  std::array<std::uint8_t, 16> out;
  store(st, out.data());
  return out;
}

std::array<std::uint8_t, 16> decrypt(const std::uint8_t* key, std::size_t key_bytes,
                                     const std::uint8_t* ciphertext, const Box* box) {
  const Box inv = invert_box(box ? *box : sbox());
  const Schedule ks = key_schedule(key, key_bytes);

  State st;
  load(st, ciphertext);
  add_round_key(st, ks, ks.nr);
  for (int round = ks.nr - 1; round >= 1; --round) {
    inv_shift_rows(st);
    sub_bytes(st, inv);
    add_round_key(st, ks, round);
    inv_mix_columns(st);
  }
  inv_shift_rows(st);
  sub_bytes(st, inv);
  add_round_key(st, ks, 0);

  std::array<std::uint8_t, 16> out;
  store(st, out.data());
  return out;
}

}  // namespace refaes
