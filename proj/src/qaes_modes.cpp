#include "qaes/qaes_modes.hpp"

#include <cstring>
#include <stdexcept>

namespace qaes {

namespace {

Block block_from_bytes(std::span<const std::uint8_t> b) {
  Block out;
  std::memcpy(out.data(), b.data(), 16);
  return out;
}

void increment_be(Block& counter) {
  for (int i = 15; i >= 0; --i)
    if (++counter[static_cast<std::size_t>(i)] != 0) break;
}

}  // namespace

QaesContext QaesContext::offline_init(QuantumKeyStream& stream, int key_len, BlockMode bm) {
  QaesContext ctx;
  ctx.mode_ = QaesMode::offline;
  ctx.block_mode_ = bm;
  ctx.key_len_ = key_len;
  ctx.params_ = params_for_key_len(key_len);
  ctx.box_ = generate_box(stream.take_bytes(32));
  ctx.round_keys_ = expand_key(stream.take_bytes(static_cast<std::size_t>(key_len) / 8), ctx.params_);
  ctx.keys_ready_ = true;
  ctx.box_ready_ = true;
  ctx.offline_init_bits_ = 256 + static_cast<std::size_t>(key_len);
  return ctx;
}

QaesContext QaesContext::offline_init(const BitString& key_bits, int key_len, BlockMode bm) {
  QuantumKeyStream stream{key_bits};
  return offline_init(stream, key_len, bm);
}

QaesContext QaesContext::offline_with_standard_sbox(std::span<const std::uint8_t> key, int key_len,
                                                    BlockMode bm) {
  if (key.size() != static_cast<std::size_t>(key_len) / 8)
    throw std::invalid_argument("key bytes do not match key length");
  QaesContext ctx;
  ctx.mode_ = QaesMode::offline;
  ctx.block_mode_ = bm;
  ctx.key_len_ = key_len;
  ctx.params_ = params_for_key_len(key_len);
  ctx.box_.forward = standard_sbox();
  ctx.box_.inverse = standard_inverse_sbox();
  ctx.box_.seed_digest = 0;
  ctx.standard_box_ = true;
  ctx.round_keys_ = expand_key(key, ctx.params_);
  ctx.keys_ready_ = true;
  ctx.box_ready_ = true;
  return ctx;
}

QaesContext QaesContext::online_init(QuantumKeyStream stream, int key_len, BlockMode bm,
                                     KeyRefresh key_refresh, BoxRefresh box_refresh) {
  QaesContext ctx;
  ctx.mode_ = QaesMode::online;
  ctx.block_mode_ = bm;
  ctx.key_len_ = key_len;
  ctx.params_ = params_for_key_len(key_len);
  ctx.key_refresh_ = key_refresh;
  ctx.box_refresh_ = box_refresh;
  ctx.stream_ = std::move(stream);
  ctx.init_cursor_ = ctx.stream_.consumed();
  return ctx;
}

void QaesContext::begin_message() { next_index_ = 0; }

void QaesContext::refresh_box() {
  box_ = generate_box(stream_.take_bytes(32));
  box_ready_ = true;
  ++box_refreshes_;
}

void QaesContext::refresh_round_boxes() {
  round_boxes_.clear();
  round_boxes_.reserve(static_cast<std::size_t>(params_.nr));
  for (int r = 0; r < params_.nr; ++r) {
    round_boxes_.push_back(generate_box(stream_.take_bytes(32)));
    ++box_refreshes_;
  }
  box_ready_ = true;
}

void QaesContext::draw_keys() {
  whitening_ = block_from_bytes(stream_.take_bytes(16));
  round_keys_.keys.resize(static_cast<std::size_t>(params_.nr + 1));
  const auto raw = stream_.take_bytes(16 * static_cast<std::size_t>(params_.nr + 1));
  for (int r = 0; r <= params_.nr; ++r)
    round_keys_.keys[static_cast<std::size_t>(r)] =
        block_from_bytes(std::span(raw).subspan(16 * static_cast<std::size_t>(r), 16));
  keys_ready_ = true;
  ++key_draws_;
}

void QaesContext::advance_for_block(std::size_t index) {
  if (index != next_index_)
    throw std::invalid_argument("online blocks must be processed in order (expected " +
                                std::to_string(next_index_) + ", got " + std::to_string(index) + ")");
  if (index == 0) {
    if (box_refresh_ == BoxRefresh::per_message) refresh_box();
    if (key_refresh_ == KeyRefresh::per_message) draw_keys();
  }
  if (key_refresh_ == KeyRefresh::per_block) draw_keys();
  if (box_refresh_ == BoxRefresh::per_block) refresh_box();
  if (box_refresh_ == BoxRefresh::per_round) refresh_round_boxes();
  ++next_index_;
}

Block QaesContext::raw_encrypt(const Block& in) {
  if (box_refresh_ == BoxRefresh::per_round && mode_ == QaesMode::online) {
    std::vector<const SboxTable*> boxes;
    boxes.reserve(round_boxes_.size());
    for (const auto& b : round_boxes_) boxes.push_back(&b.forward);
    return encrypt_block(in, round_keys_, boxes);
  }
  return encrypt_block(in, round_keys_, box_.forward);
}

Block QaesContext::raw_decrypt(const Block& in) {
  if (box_refresh_ == BoxRefresh::per_round && mode_ == QaesMode::online) {
    std::vector<const SboxTable*> boxes;
    boxes.reserve(round_boxes_.size());
    for (const auto& b : round_boxes_) boxes.push_back(&b.inverse);
    return decrypt_block(in, round_keys_, boxes);
  }
  return decrypt_block(in, round_keys_, box_.inverse);
}

Block QaesContext::encrypt_block_at(const Block& plain, std::size_t index) {
  if (mode_ == QaesMode::offline) return raw_encrypt(plain);
  advance_for_block(index);
  Block x = plain;
  for (int i = 0; i < 16; ++i) x[static_cast<std::size_t>(i)] ^= whitening_[static_cast<std::size_t>(i)];
  return raw_encrypt(x);
}

Block QaesContext::decrypt_block_at(const Block& cipher, std::size_t index) {
  if (mode_ == QaesMode::offline) return raw_decrypt(cipher);
  advance_for_block(index);
  Block x = raw_decrypt(cipher);
  for (int i = 0; i < 16; ++i) x[static_cast<std::size_t>(i)] ^= whitening_[static_cast<std::size_t>(i)];
  return x;
}

std::vector<std::uint8_t> QaesContext::stream_xcrypt(std::span<const std::uint8_t> input,
                                                     const Block& nonce) {
  std::vector<std::uint8_t> out(input.size());
  Block feed = nonce;  // CTR counter, CFB/OFB feedback register
  std::size_t off = 0, index = 0;
  while (off < input.size()) {
    const std::size_t n = std::min<std::size_t>(16, input.size() - off);
    Block ks{};
    switch (block_mode_) {
      case BlockMode::ctr: {
        ks = encrypt_block_at(feed, index);
        increment_be(feed);
        break;
      }
      case BlockMode::ofb: {
        feed = encrypt_block_at(feed, index);
        ks = feed;
        break;
      }
      case BlockMode::cfb: {
        ks = encrypt_block_at(feed, index);
        break;
      }
      default:
        throw std::logic_error("stream_xcrypt called for a non-stream mode");
    }
    for (std::size_t i = 0; i < n; ++i) out[off + i] = input[off + i] ^ ks[i];
    if (block_mode_ == BlockMode::cfb && n == 16) {
      // Feedback is always the ciphertext: freshly written on encrypt,
      // the input itself on decrypt. Both live at the same offset, and
      // the caller tells us which buffer holds cipher bytes.
      std::memcpy(feed.data(), cfb_feedback_ == CfbFeedback::output ? out.data() + off
                                                                    : input.data() + off,
                  16);
    }
    off += n;
    ++index;
  }
  return out;
}

std::vector<std::uint8_t> QaesContext::encrypt_message(std::span<const std::uint8_t> plaintext,
                                                       const Block& nonce) {
  begin_message();
  if (block_mode_ == BlockMode::raw) {
    const std::size_t pad = 16 - plaintext.size() % 16;
    std::vector<std::uint8_t> padded(plaintext.begin(), plaintext.end());
    padded.insert(padded.end(), pad, static_cast<std::uint8_t>(pad));
    std::vector<std::uint8_t> out(padded.size());
    for (std::size_t off = 0, index = 0; off < padded.size(); off += 16, ++index) {
      const Block c = encrypt_block_at(block_from_bytes(std::span(padded).subspan(off, 16)), index);
      std::memcpy(out.data() + off, c.data(), 16);
    }
    return out;
  }
  cfb_feedback_ = CfbFeedback::output;
  return stream_xcrypt(plaintext, nonce);
}

std::vector<std::uint8_t> QaesContext::decrypt_message(std::span<const std::uint8_t> ciphertext,
                                                       const Block& nonce) {
  begin_message();
  if (block_mode_ == BlockMode::raw) {
    if (ciphertext.empty() || ciphertext.size() % 16 != 0)
      throw FormatError("raw-block ciphertext must be a positive multiple of 16 bytes");
    std::vector<std::uint8_t> padded(ciphertext.size());
    for (std::size_t off = 0, index = 0; off < ciphertext.size(); off += 16, ++index) {
      const Block p =
          decrypt_block_at(block_from_bytes(std::span(ciphertext).subspan(off, 16)), index);
      std::memcpy(padded.data() + off, p.data(), 16);
    }
    const std::uint8_t pad = padded.back();
    if (pad < 1 || pad > 16) throw FormatError("bad raw-block padding");
    for (std::size_t i = padded.size() - pad; i < padded.size(); ++i)
      if (padded[i] != pad) throw FormatError("bad raw-block padding");
    padded.resize(padded.size() - pad);
    return padded;
  }
  cfb_feedback_ = CfbFeedback::input;
  return stream_xcrypt(ciphertext, nonce);
}

std::size_t QaesContext::stream_bits_consumed() const {
  if (mode_ == QaesMode::offline) return offline_init_bits_;
  return stream_.consumed() - init_cursor_;
}

const char* to_string(QaesMode m) { return m == QaesMode::online ? "online" : "offline"; }

const char* to_string(BlockMode m) {
  switch (m) {
    case BlockMode::ctr: return "ctr";
    case BlockMode::cfb: return "cfb";
    case BlockMode::ofb: return "ofb";
    case BlockMode::raw: return "raw";
  }
  return "?";
}

BlockMode block_mode_from_string(const std::string& s) {
  if (s == "ctr") return BlockMode::ctr;
  if (s == "cfb") return BlockMode::cfb;
  if (s == "ofb") return BlockMode::ofb;
  if (s == "raw") return BlockMode::raw;
  throw FormatError("unknown block mode '" + s + "'");
}

std::size_t message_blocks(std::size_t len, BlockMode bm, bool is_ciphertext) {
  if (bm == BlockMode::raw) return is_ciphertext ? len / 16 : len / 16 + 1;
  return (len + 15) / 16;
}

std::size_t online_bits_needed(std::size_t blocks, const CipherParams& params, KeyRefresh kr,
                               BoxRefresh br) {
  if (blocks == 0) return 0;
  const std::size_t draws = kr == KeyRefresh::per_block ? blocks : 1;
  std::size_t boxes = 1;
  if (br == BoxRefresh::per_block) boxes = blocks;
  if (br == BoxRefresh::per_round) boxes = blocks * static_cast<std::size_t>(params.nr);
  return draws * 128 * static_cast<std::size_t>(params.nr + 2) + boxes * 256;
}

}  // namespace qaes
