#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <vector>

#include "doctest.h"
#include "qaes/qaes_modes.hpp"
#include "qaes/rng.hpp"
#include "qaes/util.hpp"
#include "reference_aes.hpp"

using namespace qaes;

namespace {

BitString stream_bits(std::uint64_t seed, std::size_t nbits) {
  Xoshiro256 rng(seed);
  return rng.random_bits(nbits);
}

std::vector<std::uint8_t> pattern_bytes(std::size_t n, std::uint64_t seed) {
  std::vector<std::uint8_t> v(n);
  Xoshiro256 rng(seed);
  rng.fill_bytes(v);
  return v;
}

Block nonce_of(std::uint8_t fill) {
  Block n;
  n.fill(fill);
  return n;
}

}  // namespace

TEST_CASE("offline roundtrip across key lengths and block modes") {
  for (int key_len : {128, 192, 256}) {
    for (BlockMode bm : {BlockMode::ctr, BlockMode::cfb, BlockMode::ofb, BlockMode::raw}) {
      CAPTURE(key_len);
      CAPTURE(static_cast<int>(bm));
      const BitString bits = stream_bits(50, 256 + static_cast<std::size_t>(key_len));
      const auto pt = pattern_bytes(333, 7);

      QaesContext enc = QaesContext::offline_init(bits, key_len, bm);
      const auto ct = enc.encrypt_message(pt, nonce_of(0xa5));
      QaesContext dec = QaesContext::offline_init(bits, key_len, bm);
      CHECK(dec.decrypt_message(ct, nonce_of(0xa5)) == pt);

      if (bm == BlockMode::raw) {
        CHECK(ct.size() == 336);  // padded to the next boundary
      } else {
        CHECK(ct.size() == pt.size());
        CHECK_FALSE(ct == pt);
      }
    }
  }
}

TEST_CASE("stream modes preserve length on odd and empty sizes") {
  const BitString bits = stream_bits(51, 256 + 128);
  for (BlockMode bm : {BlockMode::ctr, BlockMode::cfb, BlockMode::ofb}) {
    for (std::size_t n : {0ul, 1ul, 15ul, 16ul, 17ul, 31ul, 32ul}) {
      CAPTURE(static_cast<int>(bm));
      CAPTURE(n);
      const auto pt = pattern_bytes(n, n + 1);
      QaesContext enc = QaesContext::offline_init(bits, 128, bm);
      const auto ct = enc.encrypt_message(pt, nonce_of(3));
      CHECK(ct.size() == n);
      QaesContext dec = QaesContext::offline_init(bits, 128, bm);
      CHECK(dec.decrypt_message(ct, nonce_of(3)) == pt);
    }
  }
}

TEST_CASE("raw mode pads, unpads and rejects corrupt padding") {
  const BitString bits = stream_bits(52, 256 + 128);
  for (std::size_t n : {1ul, 15ul, 16ul, 17ul, 32ul}) {
    CAPTURE(n);
    const auto pt = pattern_bytes(n, n + 9);
    QaesContext enc = QaesContext::offline_init(bits, 128, BlockMode::raw);
    const auto ct = enc.encrypt_message(pt, nonce_of(0));
    CHECK(ct.size() % 16 == 0);
    CHECK(ct.size() >= pt.size() + 1);
    QaesContext dec = QaesContext::offline_init(bits, 128, BlockMode::raw);
    CHECK(dec.decrypt_message(ct, nonce_of(0)) == pt);
  }

  // Flipping the final byte corrupts the pad with overwhelming odds.
  QaesContext enc = QaesContext::offline_init(bits, 128, BlockMode::raw);
  auto ct = enc.encrypt_message(pattern_bytes(20, 1), nonce_of(0));
  ct.back() ^= 0x01;
  QaesContext dec = QaesContext::offline_init(bits, 128, BlockMode::raw);
  CHECK_THROWS_AS(dec.decrypt_message(ct, nonce_of(0)), FormatError);

  QaesContext dec2 = QaesContext::offline_init(bits, 128, BlockMode::raw);
  CHECK_THROWS_AS(dec2.decrypt_message(pattern_bytes(17, 2), nonce_of(0)), FormatError);
}

TEST_CASE("offline init consumes box material then key material") {
  const BitString bits = stream_bits(53, 256 + 128 + 64);
  QuantumKeyStream stream(bits);
  QaesContext ctx = QaesContext::offline_init(stream, 128, BlockMode::ctr);
  CHECK(stream.consumed() == 256 + 128);
  CHECK(ctx.stream_bits_consumed() == 256 + 128);
  CHECK(ctx.key_draws() == 0);

  // The box comes from the first 256 bits, the key from the next 128.
  const DqsBox expect_box = generate_box(bits.slice(0, 256).to_bytes());
  CHECK(ctx.box().forward == expect_box.forward);
  CHECK(ctx.box().seed_digest == expect_box.seed_digest);

  QuantumKeyStream starved(stream_bits(54, 300));
  CHECK_THROWS_AS(QaesContext::offline_init(starved, 128, BlockMode::ctr), KeyDepletionError);
}

TEST_CASE("standard-box offline context equals classical AES") {
  const auto key = pattern_bytes(16, 77);
  QaesContext ctx = QaesContext::offline_with_standard_sbox(key, 128, BlockMode::ctr);
  CHECK(ctx.uses_standard_box());
  CHECK(ctx.stream_bits_consumed() == 0);

  Block pt;
  for (int i = 0; i < 16; ++i) pt[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  const Block ct = ctx.encrypt_block_at(pt, 0);
  const auto ref = refaes::encrypt(key.data(), key.size(), pt.data());
  CHECK(std::equal(ct.begin(), ct.end(), ref.begin()));
}

TEST_CASE("online roundtrip over every grain combination") {
  const auto pt = pattern_bytes(100, 19);  // 7 blocks in stream modes
  for (KeyRefresh kr : {KeyRefresh::per_block, KeyRefresh::per_message}) {
    for (BoxRefresh br : {BoxRefresh::per_message, BoxRefresh::per_block, BoxRefresh::per_round}) {
      for (BlockMode bm : {BlockMode::ctr, BlockMode::cfb, BlockMode::ofb, BlockMode::raw}) {
        CAPTURE(static_cast<int>(kr));
        CAPTURE(static_cast<int>(br));
        CAPTURE(static_cast<int>(bm));
        const auto params = params_for_key_len(128);
        const std::size_t need =
            online_bits_needed(message_blocks(pt.size(), bm, false), params, kr, br);
        const BitString bits = stream_bits(60, need);

        QaesContext enc = QaesContext::online_init(QuantumKeyStream(bits), 128, bm, kr, br);
        const auto ct = enc.encrypt_message(pt, nonce_of(0x11));
        CHECK(enc.stream_bits_consumed() == need);

        QaesContext dec = QaesContext::online_init(QuantumKeyStream(bits), 128, bm, kr, br);
        CHECK(dec.decrypt_message(ct, nonce_of(0x11)) == pt);
      }
    }
  }
}

TEST_CASE("online accounting identity holds after every message") {
  const auto params = params_for_key_len(192);
  for (KeyRefresh kr : {KeyRefresh::per_block, KeyRefresh::per_message}) {
    for (BoxRefresh br : {BoxRefresh::per_message, BoxRefresh::per_block, BoxRefresh::per_round}) {
      QaesContext ctx = QaesContext::online_init(QuantumKeyStream(stream_bits(61, 2000000)), 192,
                                                 BlockMode::ctr, kr, br);
      for (std::size_t msg = 0; msg < 3; ++msg) {
        ctx.encrypt_message(pattern_bytes(70 + msg * 16, msg), nonce_of(1));
        const std::size_t expect = ctx.key_draws() * 128 * (static_cast<std::size_t>(params.nr) + 2) +
                                   ctx.box_refreshes() * 256;
        CHECK(ctx.stream_bits_consumed() == expect);
      }
    }
  }
}

TEST_CASE("per-round refresh burns one box per round per block") {
  const auto params = params_for_key_len(128);
  QaesContext ctx = QaesContext::online_init(QuantumKeyStream(stream_bits(62, 1000000)), 128,
                                             BlockMode::ctr, KeyRefresh::per_message,
                                             BoxRefresh::per_round);
  ctx.encrypt_message(pattern_bytes(48, 5), nonce_of(9));  // 3 blocks
  CHECK(ctx.box_refreshes() == 3 * static_cast<std::size_t>(params.nr));
  CHECK(ctx.key_draws() == 1);
}

TEST_CASE("online blocks must arrive in order") {
  QaesContext ctx = QaesContext::online_init(QuantumKeyStream(stream_bits(63, 100000)), 128,
                                             BlockMode::ctr);
  Block b{};
  ctx.begin_message();
  (void)ctx.encrypt_block_at(b, 0);
  CHECK_THROWS_AS(ctx.encrypt_block_at(b, 0), std::invalid_argument);
  (void)ctx.encrypt_block_at(b, 1);
  CHECK_THROWS_AS(ctx.encrypt_block_at(b, 3), std::invalid_argument);
  ctx.begin_message();
  (void)ctx.encrypt_block_at(b, 0);
}

TEST_CASE("online depletion throws rather than reusing bits") {
  const auto params = params_for_key_len(128);
  const std::size_t one_block =
      online_bits_needed(1, params, KeyRefresh::per_block, BoxRefresh::per_message);
  QaesContext ctx = QaesContext::online_init(QuantumKeyStream(stream_bits(64, one_block)), 128,
                                             BlockMode::ctr);
  const auto ct = ctx.encrypt_message(pattern_bytes(16, 3), nonce_of(2));
  CHECK(ct.size() == 16);
  CHECK_THROWS_AS(ctx.encrypt_message(pattern_bytes(16, 4), nonce_of(2)), KeyDepletionError);
}

TEST_CASE("single-block message with per-message grains matches per-block grains") {
  // With one block there is no grain distinction; both layouts read the
  // stream identically, so ciphertexts coincide.
  const auto pt = pattern_bytes(16, 21);
  const auto params = params_for_key_len(128);
  const std::size_t need =
      online_bits_needed(1, params, KeyRefresh::per_block, BoxRefresh::per_block);
  const BitString bits = stream_bits(65, need);

  QaesContext a = QaesContext::online_init(QuantumKeyStream(bits), 128, BlockMode::ctr,
                                           KeyRefresh::per_block, BoxRefresh::per_message);
  QaesContext b = QaesContext::online_init(QuantumKeyStream(bits), 128, BlockMode::ctr,
                                           KeyRefresh::per_message, BoxRefresh::per_message);
  const auto ca = a.encrypt_message(pt, nonce_of(8));
  const auto cb = b.encrypt_message(pt, nonce_of(8));
  CHECK(ca == cb);
}

TEST_CASE("message block counts and online demand arithmetic") {
  CHECK(message_blocks(0, BlockMode::ctr, false) == 0);
  CHECK(message_blocks(1, BlockMode::ctr, false) == 1);
  CHECK(message_blocks(16, BlockMode::cfb, false) == 1);
  CHECK(message_blocks(17, BlockMode::ofb, false) == 2);
  CHECK(message_blocks(16, BlockMode::raw, false) == 2);   // pad always grows
  CHECK(message_blocks(15, BlockMode::raw, false) == 1);
  CHECK(message_blocks(32, BlockMode::raw, true) == 2);    // ciphertext is block-shaped

  const auto params = params_for_key_len(128);
  CHECK(online_bits_needed(0, params, KeyRefresh::per_block, BoxRefresh::per_round) == 0);
  CHECK(online_bits_needed(1, params, KeyRefresh::per_block, BoxRefresh::per_message) ==
        128 * 12 + 256);
  CHECK(online_bits_needed(4, params, KeyRefresh::per_block, BoxRefresh::per_message) ==
        4 * 128 * 12 + 256);
  CHECK(online_bits_needed(4, params, KeyRefresh::per_message, BoxRefresh::per_round) ==
        128 * 12 + 4 * 10 * 256);
}

TEST_CASE("online golden vector is frozen") {
  // Two zero blocks, CTR, zero nonce, stream from seed 1000. Pins the
  // draw order end to end; any reordering of stream reads breaks this.
  const auto params = params_for_key_len(128);
  const std::size_t need =
      online_bits_needed(2, params, KeyRefresh::per_block, BoxRefresh::per_message);
  const BitString bits = stream_bits(1000, need);
  QaesContext ctx = QaesContext::online_init(QuantumKeyStream(bits), 128, BlockMode::ctr);
  const std::vector<std::uint8_t> zeros(32, 0);
  const auto ct = ctx.encrypt_message(zeros, nonce_of(0));
  CHECK(to_hex(ct) == "344f6b5cd9c8245a4df65194d21cf7c233341389735a86f65c4dab45e6e05e28");
}

TEST_CASE("different stream material changes online output") {
  const auto params = params_for_key_len(128);
  const std::size_t need =
      online_bits_needed(1, params, KeyRefresh::per_block, BoxRefresh::per_message);
  QaesContext a = QaesContext::online_init(QuantumKeyStream(stream_bits(70, need)), 128,
                                           BlockMode::ctr);
  QaesContext b = QaesContext::online_init(QuantumKeyStream(stream_bits(71, need)), 128,
                                           BlockMode::ctr);
  const auto pt = pattern_bytes(16, 1);
  CHECK_FALSE(a.encrypt_message(pt, nonce_of(0)) == b.encrypt_message(pt, nonce_of(0)));
}
