#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace qaes {

/// Word counts and round count for one key length. Only the three
/// standard rows exist: (4,4,10), (6,4,12), (8,4,14).
struct CipherParams {
  int nk;
  int nb;
  int nr;

  bool operator==(const CipherParams&) const = default;
};

/// Maps 128/192/256 to its parameter row. Throws std::invalid_argument
/// for any other length.
CipherParams params_for_key_len(int bits);

using Block = std::array<std::uint8_t, 16>;
using SboxTable = std::array<std::uint8_t, 256>;

struct RoundKeySet {
  std::vector<Block> keys;  // nr + 1 entries

  std::size_t size() const { return keys.size(); }
};

const SboxTable& standard_sbox();
const SboxTable& standard_inverse_sbox();

/// Classical key expansion. Always substitutes through the standard
/// S-box regardless of which box the cipher rounds later use, so
/// schedules stay comparable against fixed test vectors.
RoundKeySet expand_key(std::span<const std::uint8_t> key, const CipherParams& params);

/// Standard round sequence with SubBytes routed through the supplied
/// box. State is column-major 4x4; block and key bytes are consumed in
/// network order. Pure function.
Block encrypt_block(const Block& plain, const RoundKeySet& rks, const SboxTable& sbox);
Block decrypt_block(const Block& cipher, const RoundKeySet& rks, const SboxTable& inv_sbox);

/// Variant with one box per SubBytes round (rounds 1..nr, so exactly nr
/// entries). Decryption expects the matching inverse boxes in the same
/// (forward) round order.
Block encrypt_block(const Block& plain, const RoundKeySet& rks,
                    std::span<const SboxTable* const> round_boxes);
Block decrypt_block(const Block& cipher, const RoundKeySet& rks,
                    std::span<const SboxTable* const> round_inv_boxes);

namespace gf {

std::uint8_t mul(std::uint8_t a, std::uint8_t b);
void mix_column(std::uint8_t col[4]);
void inv_mix_column(std::uint8_t col[4]);

}  // namespace gf

}  // namespace qaes
