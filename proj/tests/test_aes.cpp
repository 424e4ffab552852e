#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "qaes/aes.hpp"
#include "qaes/dqsbox.hpp"
#include "qaes/rng.hpp"
#include "qaes/util.hpp"
#include "reference_aes.hpp"

using namespace qaes;

namespace {

Block block_of(const std::string& hex) {
  const auto bytes = from_hex(hex);
  REQUIRE(bytes.size() == 16);
  Block b{};
  std::copy(bytes.begin(), bytes.end(), b.begin());
  return b;
}

std::vector<std::uint8_t> seq_key(std::size_t n) {
  std::vector<std::uint8_t> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = static_cast<std::uint8_t>(i);
  return k;
}

}  // namespace

TEST_CASE("standard S-box matches the algebraic construction") {
  const auto ours = standard_sbox();
  const auto oracle = refaes::sbox();
  for (int i = 0; i < 256; ++i) CHECK(ours[i] == oracle[i]);
  CHECK(ours[0x00] == 0x63);
  CHECK(ours[0x53] == 0xed);
  CHECK(ours[0xff] == 0x16);
}

TEST_CASE("inverse S-box inverts the forward table") {
  const auto fwd = standard_sbox();
  const auto inv = standard_inverse_sbox();
  for (int i = 0; i < 256; ++i) {
    CHECK(inv[fwd[i]] == i);
    CHECK(fwd[inv[i]] == i);
  }
}

TEST_CASE("mix_column reference vector") {
  std::uint8_t col[4] = {0xdb, 0x13, 0x53, 0x45};
  gf::mix_column(col);
  CHECK(col[0] == 0x8e);
  CHECK(col[1] == 0x4d);
  CHECK(col[2] == 0xa1);
  CHECK(col[3] == 0xbc);
  gf::inv_mix_column(col);
  CHECK(col[0] == 0xdb);
  CHECK(col[1] == 0x13);
  CHECK(col[2] == 0x53);
  CHECK(col[3] == 0x45);
}

TEST_CASE("published known answers for all key lengths") {
  const Block pt = block_of("00112233445566778899aabbccddeeff");
  const auto box = standard_sbox();
  const auto inv = standard_inverse_sbox();

  struct Case {
    std::size_t key_bytes;
    const char* expect;
  };
  const Case cases[] = {
      {16, "69c4e0d86a7b0430d8cdb78070b4c55a"},
      {24, "dda97ca4864cdfe06eaf70a0ec0d7191"},
      {32, "8ea2b7ca516745bfeafc49904b496089"},
  };
  for (const auto& c : cases) {
    CAPTURE(c.key_bytes);
    const auto key = seq_key(c.key_bytes);
    const auto params = params_for_key_len(static_cast<int>(c.key_bytes * 8));
    const auto keys = expand_key(key, params);
    CHECK(keys.size() == static_cast<std::size_t>(params.nr) + 1);

    const Block ct = encrypt_block(pt, keys, box);
    CHECK(to_hex(ct) == c.expect);
    const Block back = decrypt_block(ct, keys, inv);
    CHECK(back == pt);
  }
}

TEST_CASE("key schedule word counts and first round key") {
  const auto key = seq_key(16);
  const auto keys = expand_key(key, params_for_key_len(128));
  for (int i = 0; i < 16; ++i) CHECK(keys.keys[0][i] == key[i]);
}

TEST_CASE("agrees with the independent oracle on random inputs") {
  Xoshiro256 rng(2024);
  const auto box = standard_sbox();
  const auto inv = standard_inverse_sbox();
  for (int key_bits : {128, 192, 256}) {
    const auto params = params_for_key_len(key_bits);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<std::uint8_t> key(static_cast<std::size_t>(key_bits) / 8);
      rng.fill_bytes(key);
      Block pt;
      rng.fill_bytes(pt);

      const auto keys = expand_key(key, params);
      const Block mine = encrypt_block(pt, keys, box);
      const auto ref = refaes::encrypt(key.data(), key.size(), pt.data());
      CHECK(std::equal(mine.begin(), mine.end(), ref.begin()));
      CHECK(decrypt_block(mine, keys, inv) == pt);
    }
  }
}

TEST_CASE("injected S-box changes SubBytes but not the key schedule") {
  Xoshiro256 rng(7);
  std::array<std::uint8_t, 32> material{};
  rng.fill_bytes(material);
  const DqsBox dqs = generate_box(material);

  const auto key = seq_key(16);
  const auto params = params_for_key_len(128);
  const auto keys = expand_key(key, params);
  Block pt;
  rng.fill_bytes(pt);

  const Block mine = encrypt_block(pt, keys, dqs.forward);
  const auto ref = refaes::encrypt(key.data(), key.size(), pt.data(), &dqs.forward);
  CHECK(std::equal(mine.begin(), mine.end(), ref.begin()));
  CHECK(decrypt_block(mine, keys, dqs.inverse) == pt);

  const Block standard = encrypt_block(pt, keys, standard_sbox());
  CHECK(mine != standard);
}

TEST_CASE("per-round box spans roundtrip and degenerate to a single box") {
  Xoshiro256 rng(99);
  const auto params = params_for_key_len(256);
  const auto key = seq_key(32);
  const auto keys = expand_key(key, params);

  std::vector<DqsBox> boxes;
  std::vector<const SboxTable*> fwd, inv;
  for (int r = 0; r < params.nr; ++r) {
    std::array<std::uint8_t, 32> m{};
    rng.fill_bytes(m);
    boxes.push_back(generate_box(m));
  }
  for (const auto& b : boxes) {
    fwd.push_back(&b.forward);
    inv.push_back(&b.inverse);
  }

  Block pt;
  rng.fill_bytes(pt);
  const Block ct = encrypt_block(pt, keys, fwd);
  CHECK(decrypt_block(ct, keys, inv) == pt);

  std::vector<const SboxTable*> same_fwd(params.nr, &boxes[0].forward);
  std::vector<const SboxTable*> same_inv(params.nr, &boxes[0].inverse);
  const Block via_span = encrypt_block(pt, keys, same_fwd);
  const Block via_single = encrypt_block(pt, keys, boxes[0].forward);
  CHECK(via_span == via_single);
  CHECK(decrypt_block(via_span, keys, same_inv) == pt);
}

TEST_CASE("parameter table rejects unknown key lengths") {
  CHECK(params_for_key_len(128).nr == 10);
  CHECK(params_for_key_len(192).nr == 12);
  CHECK(params_for_key_len(256).nr == 14);
  CHECK(params_for_key_len(192).nk == 6);
  CHECK_THROWS_AS(params_for_key_len(64), std::invalid_argument);
  CHECK_THROWS_AS(params_for_key_len(0), std::invalid_argument);
}
