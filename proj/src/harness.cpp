#include "qaes/harness.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <thread>

#include "qaes/sha256.hpp"

namespace qaes {

namespace {

constexpr std::uint8_t kProtocolVersion = 1;
constexpr std::size_t kQubitsPerBatch = 16384;
constexpr std::size_t kDataChunk = 65536;
constexpr std::size_t kMaxPump = 200000;  // keeps SIFT_IDX inside one frame
constexpr std::size_t kDigestDropBits = 64;

std::uint16_t to_bp(double fraction) {
  return static_cast<std::uint16_t>(fraction * 10000.0 + 0.5);
}

double from_bp(std::uint16_t bp) { return static_cast<double>(bp) / 10000.0; }

std::string frame_line(const char* dir, const Frame& f) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s %s %016llx", dir, to_string(f.tag),
                static_cast<unsigned long long>(sha256_trunc64(f.payload)));
  return buf;
}

std::uint64_t bitstring_digest(const BitString& bits) {
  std::vector<std::uint8_t> buf;
  put_u64be(buf, bits.size());
  buf.insert(buf.end(), bits.data().begin(), bits.data().end());
  return sha256_trunc64(buf);
}

std::uint8_t key_len_code(int key_len) {
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

}  // namespace

const char* to_string(Role r) { return r == Role::master ? "master" : "slave"; }

const char* to_string(TerminalState s) {
  switch (s) {
    case TerminalState::running: return "running";
    case TerminalState::finished: return "finished";
    case TerminalState::aborted_qber: return "aborted_qber";
    case TerminalState::aborted_digest: return "aborted_digest";
    case TerminalState::aborted_key_depleted: return "aborted_key_depleted";
    case TerminalState::failed_protocol: return "failed_protocol";
  }
  return "?";
}

Endpoint::Endpoint(const HarnessConfig& cfg) : cfg_(cfg), rng_(cfg.rng_seed) {
  if (cfg.role == Role::master && (cfg.n_pump < 16 || cfg.n_pump > kMaxPump))
    throw std::invalid_argument("n_pump out of range");
  summary_.role = cfg.role;
  phase_ = cfg.role == Role::master ? Phase::m_await_hello_echo : Phase::s_await_hello;
}

void Endpoint::tx(std::vector<Frame>& out, Frame f) {
  summary_.transcript.push_back(frame_line("TX", f));
  out.push_back(std::move(f));
}

void Endpoint::fail(std::vector<Frame>& out, AbortReason reason, TerminalState state) {
  if (!abort_sent_) {
    Frame f{FrameTag::abort_session, {}};
    f.payload.push_back(static_cast<std::uint8_t>(reason));
    const std::uint16_t bp = to_bp(std::min(summary_.qber_estimate, 1.0));
    f.payload.push_back(static_cast<std::uint8_t>(bp >> 8));
    f.payload.push_back(static_cast<std::uint8_t>(bp & 0xff));
    tx(out, std::move(f));
    abort_sent_ = true;
  }
  summary_.abort_reason = reason;
  summary_.state = state;
  phase_ = Phase::done;
}

std::uint64_t Endpoint::usable_digest() const { return bitstring_digest(usable_key_); }

bool Endpoint::derive_usable_key(std::vector<Frame>& out) {
  usable_key_ = BitString();
  std::size_t next_sampled = 0;
  for (std::size_t s = 0; s < sifted_.size(); ++s) {
    if (next_sampled < sampled_.size() && sampled_[next_sampled] == s) {
      ++next_sampled;
      continue;
    }
    usable_key_.append_bit(my_bits_[sifted_[s]]);
  }
  if (usable_key_.size() <= kDigestDropBits) {
    fail(out, AbortReason::key_depleted, TerminalState::aborted_key_depleted);
    return false;
  }
  return true;
}

void Endpoint::adopt_final_key() {
  final_key_ = usable_key_.slice(kDigestDropBits, usable_key_.size() - kDigestDropBits);
  summary_.usable_bits = final_key_.size();
  summary_.key_digest = bitstring_digest(final_key_);
}

std::vector<Frame> Endpoint::start() {
  std::vector<Frame> out;
  if (cfg_.role != Role::master) return out;

  n_pump_ = cfg_.n_pump;
  const std::uint16_t sac_bp = to_bp(cfg_.sacrifice_fraction);
  const std::uint16_t thr_bp = to_bp(cfg_.qber_abort_threshold);
  // Decisions on both sides must agree bit-for-bit, so the master also
  // works from the wire-rounded fractions it announces.
  sacrifice_ = from_bp(sac_bp);
  threshold_ = from_bp(thr_bp);

  my_bits_.resize(n_pump_);
  my_bases_.resize(n_pump_);
  for (std::size_t i = 0; i < n_pump_; ++i) {
    my_bits_[i] = static_cast<std::uint8_t>(rng_.next_bit());
    my_bases_[i] = static_cast<std::uint8_t>(rng_.next_bit());
  }

  hello_payload_.clear();
  hello_payload_.push_back(kProtocolVersion);
  put_u32be(hello_payload_, static_cast<std::uint32_t>(n_pump_));
  hello_payload_.push_back(static_cast<std::uint8_t>(sac_bp >> 8));
  hello_payload_.push_back(static_cast<std::uint8_t>(sac_bp & 0xff));
  hello_payload_.push_back(static_cast<std::uint8_t>(thr_bp >> 8));
  hello_payload_.push_back(static_cast<std::uint8_t>(thr_bp & 0xff));
  tx(out, Frame{FrameTag::hello, hello_payload_});
  return out;
}

std::vector<Frame> Endpoint::on_frame(const Frame& f) {
  std::vector<Frame> out;
  if (terminal()) return out;
  summary_.transcript.push_back(frame_line("RX", f));

  // A peer abort terminates us in the matching state, echoing one
  // abort back so both transcripts show a mutual ABORT.
  if (f.tag == FrameTag::abort_session) {
    AbortReason reason = AbortReason::protocol;
    if (!f.payload.empty() && f.payload[0] >= 1 && f.payload[0] <= 4)
      reason = static_cast<AbortReason>(f.payload[0]);
    TerminalState st = TerminalState::failed_protocol;
    if (reason == AbortReason::qber) st = TerminalState::aborted_qber;
    if (reason == AbortReason::digest_mismatch) st = TerminalState::aborted_digest;
    if (reason == AbortReason::key_depleted) st = TerminalState::aborted_key_depleted;
    fail(out, reason, st);
    return out;
  }

  try {
    switch (phase_) {
      case Phase::m_await_hello_echo: {
        if (f.tag != FrameTag::hello || f.payload != hello_payload_)
          throw FormatError("bad HELLO echo");
        for (std::size_t start = 0; start < n_pump_; start += kQubitsPerBatch) {
          const std::size_t count = std::min(kQubitsPerBatch, n_pump_ - start);
          std::vector<Qubit> batch(count);
          for (std::size_t i = 0; i < count; ++i)
            batch[i] = Qubit{my_bits_[start + i], my_bases_[start + i]};
          Frame q{FrameTag::qbatch, {}};
          put_u32be(q.payload, static_cast<std::uint32_t>(start));
          put_u32be(q.payload, static_cast<std::uint32_t>(count));
          const auto packed = pack_qubits(batch);
          q.payload.insert(q.payload.end(), packed.begin(), packed.end());
          tx(out, std::move(q));
        }
        phase_ = Phase::m_await_bases;
        break;
      }

      case Phase::m_await_bases: {
        if (f.tag != FrameTag::bases) throw FormatError("expected BASES");
        if (f.payload.size() != 4 + (n_pump_ + 7) / 8 || get_u32be(f.payload, 0) != n_pump_)
          throw FormatError("bad BASES payload");
        const BitString bases =
            BitString::from_bytes(std::span(f.payload).subspan(4)).slice(0, n_pump_);
        for (std::size_t i = 0; i < n_pump_; ++i)
          if (bases.bit(i) == my_bases_[i]) sifted_.push_back(static_cast<std::uint32_t>(i));
        summary_.n_sifted = sifted_.size();

        Frame sift{FrameTag::sift_idx, {}};
        put_u32be(sift.payload, static_cast<std::uint32_t>(sifted_.size()));
        for (std::uint32_t idx : sifted_) put_u32be(sift.payload, idx);
        tx(out, std::move(sift));

        const std::size_t n_sifted = sifted_.size();
        std::size_t n_sample =
            static_cast<std::size_t>(sacrifice_ * static_cast<double>(n_sifted) + 0.5);
        n_sample = std::min(n_sample, n_sifted);
        std::vector<std::uint32_t> order(n_sifted);
        std::iota(order.begin(), order.end(), 0u);
        for (std::size_t i = 0; i < n_sample; ++i) {
          const std::size_t j = i + rng_.uniform(static_cast<std::uint32_t>(n_sifted - i));
          std::swap(order[i], order[j]);
        }
        sampled_.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_sample));
        std::sort(sampled_.begin(), sampled_.end());

        sampled_bits_ = BitString();
        for (std::uint32_t s : sampled_) sampled_bits_.append_bit(my_bits_[sifted_[s]]);

        Frame qs{FrameTag::qber_sample, {}};
        put_u32be(qs.payload, static_cast<std::uint32_t>(n_sample));
        for (std::uint32_t s : sampled_) put_u32be(qs.payload, s);
        qs.payload.insert(qs.payload.end(), sampled_bits_.data().begin(),
                          sampled_bits_.data().end());
        tx(out, std::move(qs));
        phase_ = Phase::m_await_qber_reply;
        break;
      }

      case Phase::m_await_qber_reply: {
        if (f.tag != FrameTag::qber_sample) throw FormatError("expected QBER_SAMPLE reply");
        const std::size_t n_sample = sampled_.size();
        if (f.payload.size() != 4 + (n_sample + 7) / 8 || get_u32be(f.payload, 0) != n_sample)
          throw FormatError("bad QBER_SAMPLE reply");
        const BitString theirs =
            n_sample ? BitString::from_bytes(std::span(f.payload).subspan(4)).slice(0, n_sample)
                     : BitString();
        std::size_t mism = 0;
        for (std::size_t i = 0; i < n_sample; ++i)
          if (theirs.bit(i) != sampled_bits_.bit(i)) ++mism;
        summary_.qber_estimate =
            n_sample ? static_cast<double>(mism) / static_cast<double>(n_sample) : 0.0;
        if (summary_.qber_estimate > threshold_) {
          fail(out, AbortReason::qber, TerminalState::aborted_qber);
          break;
        }
        if (!derive_usable_key(out)) break;
        Frame kc{FrameTag::key_confirm, {}};
        put_u64be(kc.payload, usable_digest());
        tx(out, std::move(kc));
        phase_ = Phase::m_await_key_confirm;
        break;
      }

      case Phase::m_await_key_confirm: {
        if (f.tag != FrameTag::key_confirm || f.payload.size() != 8)
          throw FormatError("expected KEY_CONFIRM reply");
        if (get_u64be(f.payload, 0) != usable_digest()) {
          fail(out, AbortReason::digest_mismatch, TerminalState::aborted_digest);
          break;
        }
        adopt_final_key();

        const auto params = params_for_key_len(cfg_.key_len);
        const std::size_t need =
            cfg_.data_mode == QaesMode::offline
                ? 256 + static_cast<std::size_t>(cfg_.key_len)
                : online_bits_needed(
                      message_blocks(cfg_.payload.size(), cfg_.data_block_mode, false), params,
                      cfg_.key_refresh, cfg_.box_refresh);
        if (final_key_.size() < need) {
          fail(out, AbortReason::key_depleted, TerminalState::aborted_key_depleted);
          break;
        }

        key_len_ = cfg_.key_len;
        data_mode_ = cfg_.data_mode;
        data_block_mode_ = cfg_.data_block_mode;
        key_refresh_ = cfg_.key_refresh;
        box_refresh_ = cfg_.box_refresh;
        nonce_ = cfg_.nonce;

        Frame p{FrameTag::params, {}};
        p.payload.push_back(key_len_code(key_len_));
        p.payload.push_back(static_cast<std::uint8_t>(data_mode_));
        p.payload.push_back(static_cast<std::uint8_t>(data_block_mode_));
        p.payload.push_back(static_cast<std::uint8_t>(key_refresh_));
        p.payload.push_back(static_cast<std::uint8_t>(box_refresh_));
        p.payload.insert(p.payload.end(), nonce_.begin(), nonce_.end());
        tx(out, std::move(p));
        phase_ = Phase::m_await_params_echo;
        break;
      }

      case Phase::m_await_params_echo: {
        if (f.tag != FrameTag::params) throw FormatError("expected PARAMS echo");

        QuantumKeyStream stream{final_key_};
        QaesContext ctx =
            data_mode_ == QaesMode::offline
                ? QaesContext::offline_init(stream, key_len_, data_block_mode_)
                : QaesContext::online_init(std::move(stream), key_len_, data_block_mode_,
                                           key_refresh_, box_refresh_);
        const auto cipher = ctx.encrypt_message(cfg_.payload, nonce_);
        summary_.data_bytes = cipher.size();

        std::size_t off = 0;
        std::uint32_t seq = 0;
        do {
          const std::size_t n = std::min(kDataChunk, cipher.size() - off);
          Frame d{FrameTag::data, {}};
          put_u32be(d.payload, seq++);
          d.payload.insert(d.payload.end(), cipher.begin() + static_cast<std::ptrdiff_t>(off),
                           cipher.begin() + static_cast<std::ptrdiff_t>(off + n));
          tx(out, std::move(d));
          off += n;
        } while (off < cipher.size());

        tx(out, Frame{FrameTag::bye, {}});
        phase_ = Phase::m_await_bye;
        break;
      }

      case Phase::m_await_bye: {
        if (f.tag != FrameTag::bye) throw FormatError("expected BYE");
        summary_.state = TerminalState::finished;
        phase_ = Phase::done;
        break;
      }

      case Phase::s_await_hello: {
        if (f.tag != FrameTag::hello || f.payload.size() != 9 || f.payload[0] != kProtocolVersion)
          throw FormatError("bad HELLO");
        n_pump_ = get_u32be(f.payload, 1);
        if (n_pump_ < 16 || n_pump_ > kMaxPump) throw FormatError("n_pump out of range");
        sacrifice_ = from_bp(static_cast<std::uint16_t>((f.payload[5] << 8) | f.payload[6]));
        threshold_ = from_bp(static_cast<std::uint16_t>((f.payload[7] << 8) | f.payload[8]));
        my_bits_.resize(n_pump_);
        my_bases_.resize(n_pump_);
        hello_payload_ = f.payload;
        tx(out, Frame{FrameTag::hello, hello_payload_});
        phase_ = Phase::s_await_qbatch;
        break;
      }

      case Phase::s_await_qbatch: {
        if (f.tag != FrameTag::qbatch) throw FormatError("expected QBATCH");
        if (f.payload.size() < 8) throw FormatError("short QBATCH");
        const std::size_t start = get_u32be(f.payload, 0);
        const std::size_t count = get_u32be(f.payload, 4);
        if (start != received_qubits_ || count == 0 || start + count > n_pump_ ||
            f.payload.size() != 8 + (count + 3) / 4)
          throw FormatError("bad QBATCH bounds");
        auto qubits = unpack_qubits(std::span(f.payload).subspan(8), count);
        for (std::size_t i = 0; i < count; ++i) {
          Qubit q = qubits[i];
          if (rng_.bernoulli(cfg_.p_noise)) q.bit ^= 1;
          const int basis = rng_.next_bit();
          const int measured = measure_qubit(q, basis, rng_);
          my_bits_[start + i] = static_cast<std::uint8_t>(measured);
          my_bases_[start + i] = static_cast<std::uint8_t>(basis);
        }
        received_qubits_ += count;
        if (received_qubits_ == n_pump_) {
          BitString bases;
          for (std::size_t i = 0; i < n_pump_; ++i) bases.append_bit(my_bases_[i]);
          Frame b{FrameTag::bases, {}};
          put_u32be(b.payload, static_cast<std::uint32_t>(n_pump_));
          b.payload.insert(b.payload.end(), bases.data().begin(), bases.data().end());
          tx(out, std::move(b));
          phase_ = Phase::s_await_sift;
        }
        break;
      }

      case Phase::s_await_sift: {
        if (f.tag != FrameTag::sift_idx) throw FormatError("expected SIFT_IDX");
        if (f.payload.size() < 4) throw FormatError("short SIFT_IDX");
        const std::size_t count = get_u32be(f.payload, 0);
        if (f.payload.size() != 4 + 4 * count) throw FormatError("bad SIFT_IDX length");
        sifted_.resize(count);
        std::uint32_t prev = 0;
        for (std::size_t i = 0; i < count; ++i) {
          sifted_[i] = get_u32be(f.payload, 4 + 4 * i);
          if (sifted_[i] >= n_pump_ || (i > 0 && sifted_[i] <= prev))
            throw FormatError("SIFT_IDX not strictly ascending");
          prev = sifted_[i];
        }
        summary_.n_sifted = count;
        phase_ = Phase::s_await_qber_sample;
        break;
      }

      case Phase::s_await_qber_sample: {
        if (f.tag != FrameTag::qber_sample) throw FormatError("expected QBER_SAMPLE");
        if (f.payload.size() < 4) throw FormatError("short QBER_SAMPLE");
        const std::size_t count = get_u32be(f.payload, 0);
        if (f.payload.size() != 4 + 4 * count + (count + 7) / 8)
          throw FormatError("bad QBER_SAMPLE length");
        sampled_.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
          sampled_[i] = get_u32be(f.payload, 4 + 4 * i);
          if (sampled_[i] >= sifted_.size() || (i > 0 && sampled_[i] <= sampled_[i - 1]))
            throw FormatError("QBER_SAMPLE indices not strictly ascending");
        }
        const BitString theirs =
            count ? BitString::from_bytes(std::span(f.payload).subspan(4 + 4 * count))
                        .slice(0, count)
                  : BitString();

        sampled_bits_ = BitString();
        for (std::uint32_t s : sampled_) sampled_bits_.append_bit(my_bits_[sifted_[s]]);

        Frame reply{FrameTag::qber_sample, {}};
        put_u32be(reply.payload, static_cast<std::uint32_t>(count));
        reply.payload.insert(reply.payload.end(), sampled_bits_.data().begin(),
                             sampled_bits_.data().end());
        tx(out, std::move(reply));

        std::size_t mism = 0;
        for (std::size_t i = 0; i < count; ++i)
          if (theirs.bit(i) != sampled_bits_.bit(i)) ++mism;
        summary_.qber_estimate =
            count ? static_cast<double>(mism) / static_cast<double>(count) : 0.0;
        if (summary_.qber_estimate > threshold_) {
          fail(out, AbortReason::qber, TerminalState::aborted_qber);
          break;
        }
        if (!derive_usable_key(out)) break;
        phase_ = Phase::s_await_key_confirm;
        break;
      }

      case Phase::s_await_key_confirm: {
        if (f.tag != FrameTag::key_confirm || f.payload.size() != 8)
          throw FormatError("expected KEY_CONFIRM");
        if (get_u64be(f.payload, 0) != usable_digest()) {
          fail(out, AbortReason::digest_mismatch, TerminalState::aborted_digest);
          break;
        }
        Frame kc{FrameTag::key_confirm, {}};
        put_u64be(kc.payload, usable_digest());
        tx(out, std::move(kc));
        adopt_final_key();
        phase_ = Phase::s_await_params;
        break;
      }

      case Phase::s_await_params: {
        if (f.tag != FrameTag::params || f.payload.size() != 21)
          throw FormatError("expected PARAMS");
        key_len_ = key_len_from_code(f.payload[0]);
        if (f.payload[1] > 1 || f.payload[2] > 3 || f.payload[3] > 1 || f.payload[4] > 2)
          throw FormatError("bad PARAMS field");
        data_mode_ = static_cast<QaesMode>(f.payload[1]);
        data_block_mode_ = static_cast<BlockMode>(f.payload[2]);
        key_refresh_ = static_cast<KeyRefresh>(f.payload[3]);
        box_refresh_ = static_cast<BoxRefresh>(f.payload[4]);
        std::memcpy(nonce_.data(), f.payload.data() + 5, 16);
        tx(out, Frame{FrameTag::params, f.payload});
        phase_ = Phase::s_await_data;
        break;
      }

      case Phase::s_await_data: {
        if (f.tag == FrameTag::data) {
          if (f.payload.size() < 4 || get_u32be(f.payload, 0) != next_data_seq_)
            throw FormatError("bad DATA sequence");
          ++next_data_seq_;
          cipher_buf_.insert(cipher_buf_.end(), f.payload.begin() + 4, f.payload.end());
          summary_.data_bytes = cipher_buf_.size();
          break;
        }
        if (f.tag != FrameTag::bye) throw FormatError("expected DATA or BYE");

        QuantumKeyStream stream{final_key_};
        QaesContext ctx =
            data_mode_ == QaesMode::offline
                ? QaesContext::offline_init(stream, key_len_, data_block_mode_)
                : QaesContext::online_init(std::move(stream), key_len_, data_block_mode_,
                                           key_refresh_, box_refresh_);
        summary_.received = ctx.decrypt_message(cipher_buf_, nonce_);
        tx(out, Frame{FrameTag::bye, {}});
        summary_.state = TerminalState::finished;
        phase_ = Phase::done;
        break;
      }

      case Phase::done:
        break;
    }
  } catch (const Error&) {
    fail(out, AbortReason::protocol, TerminalState::failed_protocol);
  } catch (const std::invalid_argument&) {
    fail(out, AbortReason::protocol, TerminalState::failed_protocol);
  }
  return out;
}

Frame EveTap::filter(const Frame& f) {
  if (f.tag != FrameTag::qbatch || f.payload.size() < 8) return f;
  const std::size_t count = get_u32be(f.payload, 4);
  if (f.payload.size() != 8 + (count + 3) / 4) return f;
  auto qubits = unpack_qubits(std::span(f.payload).subspan(8), count);
  for (auto& q : qubits) {
    if (!rng_.bernoulli(fraction_)) continue;
    measure_qubit(q, rng_.next_bit(), rng_);
  }
  Frame out{FrameTag::qbatch, {}};
  out.payload.assign(f.payload.begin(), f.payload.begin() + 8);
  const auto packed = pack_qubits(qubits);
  out.payload.insert(out.payload.end(), packed.begin(), packed.end());
  return out;
}

std::pair<SessionSummary, SessionSummary> run_lockstep(const HarnessConfig& master_cfg,
                                                       const HarnessConfig& slave_cfg,
                                                       EveTap* eve) {
  if (master_cfg.role != Role::master || slave_cfg.role != Role::slave)
    throw std::invalid_argument("run_lockstep wants one master and one slave config");
  Endpoint master(master_cfg);
  Endpoint slave(slave_cfg);

  std::vector<Frame> to_slave;
  std::vector<Frame> to_master;
  std::size_t ms_head = 0, sm_head = 0;

  auto push_to_slave = [&](std::vector<Frame>&& frames) {
    for (auto& f : frames) to_slave.push_back(eve ? eve->filter(f) : std::move(f));
  };

  push_to_slave(master.start());
  for (auto& f : slave.start()) to_master.push_back(std::move(f));

  while (true) {
    if (ms_head < to_slave.size()) {
      const Frame f = std::move(to_slave[ms_head++]);
      if (!slave.terminal()) {
        auto outs = slave.on_frame(f);
        for (auto& o : outs) to_master.push_back(std::move(o));
      }
      continue;
    }
    if (sm_head < to_master.size()) {
      const Frame f = std::move(to_master[sm_head++]);
      if (!master.terminal()) push_to_slave(master.on_frame(f));
      continue;
    }
    break;
  }

  if (!master.terminal() || !slave.terminal())
    throw Error("negotiation deadlock: no frames in flight but a party is still running");
  return {master.summary(), slave.summary()};
}

bool validate_transcript(const std::vector<std::string>& transcript) {
  bool tx_confirm = false, rx_confirm = false;
  for (const auto& line : transcript) {
    const bool is_data = line.find(" DATA ") != std::string::npos;
    if (is_data && !(tx_confirm && rx_confirm)) return false;
    if (line.rfind("TX KEY_CONFIRM", 0) == 0) tx_confirm = true;
    if (line.rfind("RX KEY_CONFIRM", 0) == 0) rx_confirm = true;
  }
  return true;
}

SocketTransport::~SocketTransport() {
  if (fd_ >= 0) ::close(fd_);
}

void SocketTransport::shutdown_write() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

namespace {

void write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw Error("socket write failed");
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

// Returns false on clean EOF before the first byte.
bool read_exact(int fd, std::uint8_t* data, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::read(fd, data + got, n - got);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw Error("socket read failed");
    }
    if (r == 0) {
      if (got == 0) return false;
      throw Error("socket closed mid-frame");
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace

void SocketTransport::send_frame(const Frame& f) {
  const auto bytes = encode_frame(f);
  write_all(fd_, bytes.data(), bytes.size());
}

std::optional<Frame> SocketTransport::recv_frame() {
  std::uint8_t head[5];
  if (!read_exact(fd_, head, 5)) return std::nullopt;
  const std::uint32_t len = get_u32be(std::span<const std::uint8_t>(head, 5), 0);
  if (len > kMaxFramePayload) throw FormatError("frame payload exceeds 1 MiB");
  std::vector<std::uint8_t> whole(5 + len);
  std::memcpy(whole.data(), head, 5);
  if (len && !read_exact(fd_, whole.data() + 5, len)) throw Error("socket closed mid-frame");
  std::size_t pos = 0;
  return decode_frame(whole, pos);
}

int tcp_listen(std::uint16_t& port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error("socket() failed");
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 || ::listen(fd, 4) < 0) {
    ::close(fd);
    throw Error("bind/listen on 127.0.0.1 failed");
  }
  socklen_t len = sizeof(addr);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0)
    port = ntohs(addr.sin_port);
  return fd;
}

int tcp_accept(int listen_fd) {
  const int fd = ::accept(listen_fd, nullptr, nullptr);
  if (fd < 0) throw Error("accept() failed");
  return fd;
}

int tcp_connect(std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(fd);
    throw Error("connect to 127.0.0.1 failed");
  }
  return fd;
}

SessionSummary run_over_socket(Endpoint& ep, SocketTransport& io) {
  for (const auto& f : ep.start()) io.send_frame(f);
  while (!ep.terminal()) {
    auto f = io.recv_frame();
    if (!f) break;  // peer closed; endpoint state reflects how far we got
    for (const auto& o : ep.on_frame(*f)) io.send_frame(o);
  }
  io.shutdown_write();
  return ep.summary();
}

void run_eve_proxy(SocketTransport& master_side, SocketTransport& slave_side, EveTap& eve) {
  auto pump = [](SocketTransport& from, SocketTransport& to, EveTap* tap) {
    try {
      while (auto f = from.recv_frame()) to.send_frame(tap ? tap->filter(*f) : *f);
    } catch (const Error&) {
      // Relay stops on either side closing; the endpoints surface it.
    }
  };
  std::thread forward([&] { pump(master_side, slave_side, &eve); });
  pump(slave_side, master_side, nullptr);
  forward.join();
}

}  // namespace qaes
