#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qaes/aes.hpp"
#include "qaes/bb84.hpp"
#include "qaes/dqsbox.hpp"
#include "qaes/util.hpp"

namespace qaes {

enum class QaesMode : std::uint8_t { offline = 0, online = 1 };
enum class BlockMode : std::uint8_t { ctr = 0, cfb = 1, ofb = 2, raw = 3 };

/// Online granularity for the whitening key + direct round keys.
enum class KeyRefresh : std::uint8_t { per_block = 0, per_message = 1 };

/// Online granularity for DQS-Box regeneration.
enum class BoxRefresh : std::uint8_t { per_message = 0, per_block = 1, per_round = 2 };

/// One keyed encryption context. Value semantics: a copy taken before
/// any traffic replays the same stream reads, which is how a decryptor
/// mirrors an online encryptor.
///
/// Offline contexts consume 256 bits (box) + key_len bits (master key,
/// classical schedule) at init and never touch key material again.
/// Online contexts draw per message/block, in this fixed order:
///   block 0 of a message: box (256b, per_message granularity),
///   then per key granularity: whitening qk (128b) + nr+1 round keys,
///   then box refresh for per_block granularity, or nr round boxes for
///   per_round. Blocks must be processed in order from index 0.
class QaesContext {
 public:
  static QaesContext offline_init(QuantumKeyStream& stream, int key_len, BlockMode bm);
  static QaesContext offline_init(const BitString& key_bits, int key_len, BlockMode bm);

  /// Degenerate offline context: standard S-box, key taken verbatim.
  /// Behaves exactly like classical AES of the same key length.
  static QaesContext offline_with_standard_sbox(std::span<const std::uint8_t> key, int key_len,
                                                BlockMode bm);

  static QaesContext online_init(QuantumKeyStream stream, int key_len, BlockMode bm,
                                 KeyRefresh key_refresh = KeyRefresh::per_block,
                                 BoxRefresh box_refresh = BoxRefresh::per_message);

  /// Resets the block counter so the next block is a message start.
  /// encrypt_message/decrypt_message call this themselves.
  void begin_message();

  /// Single-block primitives. Online contexts enforce index ==
  /// blocks-processed-so-far (stream reads never reorder) and throw
  /// KeyDepletionError when material runs out. Offline contexts are
  /// pure and ignore ordering.
  Block encrypt_block_at(const Block& plain, std::size_t index);
  Block decrypt_block_at(const Block& cipher, std::size_t index);

  /// CTR/CFB/OFB preserve length (empty in, empty out); raw mode is
  /// ECB over pad-length padding, so output grows to the next block
  /// boundary. Nonce uniqueness per message is the caller's job; raw
  /// mode ignores the nonce.
  std::vector<std::uint8_t> encrypt_message(std::span<const std::uint8_t> plaintext,
                                            const Block& nonce);
  std::vector<std::uint8_t> decrypt_message(std::span<const std::uint8_t> ciphertext,
                                            const Block& nonce);

  QaesMode mode() const { return mode_; }
  BlockMode block_mode() const { return block_mode_; }
  const CipherParams& params() const { return params_; }
  int key_len() const { return key_len_; }
  KeyRefresh key_refresh() const { return key_refresh_; }
  BoxRefresh box_refresh() const { return box_refresh_; }

  /// Box currently in force (offline: the fixed one).
  const DqsBox& box() const { return box_; }
  bool uses_standard_box() const { return standard_box_; }

  std::size_t key_draws() const { return key_draws_; }
  std::size_t box_refreshes() const { return box_refreshes_; }

  /// Stream bits consumed by this context, init included. Online
  /// post-init accounting satisfies
  ///   consumed = key_draws * 128 * (nr + 2) + box_refreshes * 256.
  std::size_t stream_bits_consumed() const;

 private:
  QaesContext() = default;

  void refresh_box();
  void refresh_round_boxes();
  void draw_keys();
  void advance_for_block(std::size_t index);
  Block raw_encrypt(const Block& in);
  Block raw_decrypt(const Block& in);

  std::vector<std::uint8_t> stream_xcrypt(std::span<const std::uint8_t> input, const Block& nonce);

  enum class CfbFeedback : std::uint8_t { output, input };

  QaesMode mode_ = QaesMode::offline;
  BlockMode block_mode_ = BlockMode::ctr;
  CfbFeedback cfb_feedback_ = CfbFeedback::output;
  KeyRefresh key_refresh_ = KeyRefresh::per_block;
  BoxRefresh box_refresh_ = BoxRefresh::per_message;
  CipherParams params_{4, 4, 10};
  int key_len_ = 128;

  QuantumKeyStream stream_;
  std::size_t init_cursor_ = 0;

  DqsBox box_;
  bool standard_box_ = false;
  std::vector<DqsBox> round_boxes_;  // per_round granularity only
  RoundKeySet round_keys_;
  Block whitening_{};
  bool keys_ready_ = false;
  bool box_ready_ = false;

  std::size_t next_index_ = 0;
  std::size_t key_draws_ = 0;
  std::size_t box_refreshes_ = 0;
  std::size_t offline_init_bits_ = 0;
};

const char* to_string(QaesMode m);
const char* to_string(BlockMode m);
BlockMode block_mode_from_string(const std::string& s);  // throws FormatError

/// Block count of one message. Raw mode always pads, so it gains a
/// block on the way in; its ciphertext is already block-shaped.
std::size_t message_blocks(std::size_t len, BlockMode bm, bool is_ciphertext);

/// Exact online stream demand for a message of the given block count:
/// key_draws * 128 * (nr + 2) + box_refreshes * 256.
std::size_t online_bits_needed(std::size_t blocks, const CipherParams& params, KeyRefresh kr,
                               BoxRefresh br);

}  // namespace qaes
