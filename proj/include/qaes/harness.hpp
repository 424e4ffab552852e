#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qaes/frame.hpp"
#include "qaes/qaes_modes.hpp"
#include "qaes/rng.hpp"

namespace qaes {

enum class Role : std::uint8_t { master = 0, slave = 1 };

enum class TerminalState : std::uint8_t {
  running = 0,
  finished = 1,
  aborted_qber = 2,
  aborted_digest = 3,
  aborted_key_depleted = 4,
  failed_protocol = 5,
};

const char* to_string(Role r);
const char* to_string(TerminalState s);

enum class AbortReason : std::uint8_t {
  none = 0,
  qber = 1,
  digest_mismatch = 2,
  key_depleted = 3,
  protocol = 4,
};

/// Per-endpoint knobs. The master's n_pump / sacrifice / threshold
/// govern the session (announced in HELLO); p_noise is the channel
/// model and is applied by the slave on receipt; payload, nonce and
/// the cipher parameters matter on the master only.
struct HarnessConfig {
  Role role = Role::master;
  std::uint64_t rng_seed = 1;
  std::size_t n_pump = 2000;
  double p_noise = 0.0;
  double sacrifice_fraction = 0.20;
  double qber_abort_threshold = 0.11;

  int key_len = 128;
  QaesMode data_mode = QaesMode::offline;
  BlockMode data_block_mode = BlockMode::ctr;
  KeyRefresh key_refresh = KeyRefresh::per_block;
  BoxRefresh box_refresh = BoxRefresh::per_message;
  Block nonce{};
  std::vector<std::uint8_t> payload;
};

struct SessionSummary {
  Role role = Role::master;
  TerminalState state = TerminalState::running;
  AbortReason abort_reason = AbortReason::none;
  double qber_estimate = 0.0;
  std::size_t n_sifted = 0;
  std::size_t usable_bits = 0;   // final key length after the digest drop
  std::uint64_t key_digest = 0;  // digest of the final key
  std::size_t data_bytes = 0;    // ciphertext bytes moved
  std::vector<std::uint8_t> received;  // slave: decrypted payload
  std::vector<std::string> transcript; // "TX TAG digest16" / "RX TAG digest16"
};

/// One negotiation party as an explicit state machine: feed frames in,
/// collect frames to send. No transport inside, which is what makes
/// lockstep runs deterministic and socket runs thin wrappers.
class Endpoint {
 public:
  explicit Endpoint(const HarnessConfig& cfg);

  /// Master emits HELLO; slave emits nothing.
  std::vector<Frame> start();

  /// Processes one delivered frame. Returns frames to send to the
  /// peer. Calling after terminal() is a no-op.
  std::vector<Frame> on_frame(const Frame& f);

  bool terminal() const { return summary_.state != TerminalState::running; }
  const SessionSummary& summary() const { return summary_; }

 private:
  enum class Phase {
    m_await_hello_echo,
    m_await_bases,
    m_await_qber_reply,
    m_await_key_confirm,
    m_await_params_echo,
    m_await_bye,
    s_await_hello,
    s_await_qbatch,
    s_await_sift,
    s_await_qber_sample,
    s_await_key_confirm,
    s_await_params,
    s_await_data,
    done,
  };

  void tx(std::vector<Frame>& out, Frame f);
  void fail(std::vector<Frame>& out, AbortReason reason, TerminalState state);
  bool derive_usable_key(std::vector<Frame>& out);  // false on depletion abort
  void adopt_final_key();
  std::uint64_t usable_digest() const;

  HarnessConfig cfg_;
  Xoshiro256 rng_;
  Phase phase_;
  SessionSummary summary_;
  bool abort_sent_ = false;

  // Session knobs fixed by HELLO (master's view of its own config).
  std::size_t n_pump_ = 0;
  double sacrifice_ = 0.0;
  double threshold_ = 0.0;
  std::vector<std::uint8_t> hello_payload_;

  std::vector<std::uint8_t> my_bits_;    // master: sent; slave: measured
  std::vector<std::uint8_t> my_bases_;
  std::size_t received_qubits_ = 0;
  std::vector<std::uint32_t> sifted_;    // positions into the pump sequence
  std::vector<std::uint32_t> sampled_;   // positions into sifted_
  BitString sampled_bits_;               // this side's bits at sampled positions
  BitString usable_key_;                 // sifted minus sampled, pre-drop
  BitString final_key_;                  // after 64-bit digest drop

  // Data phase.
  int key_len_ = 128;
  QaesMode data_mode_ = QaesMode::offline;
  BlockMode data_block_mode_ = BlockMode::ctr;
  KeyRefresh key_refresh_ = KeyRefresh::per_block;
  BoxRefresh box_refresh_ = BoxRefresh::per_message;
  Block nonce_{};
  std::vector<std::uint8_t> cipher_buf_;
  std::uint32_t next_data_seq_ = 0;
};

/// Intercept-resend on the quantum channel: measures each qubit inside
/// a QBATCH with probability eve_fraction in a random basis and
/// resends the collapsed state. Classical frames pass untouched.
class EveTap {
 public:
  EveTap(double eve_fraction, std::uint64_t seed) : fraction_(eve_fraction), rng_(seed) {}

  Frame filter(const Frame& f);

 private:
  double fraction_;
  Xoshiro256 rng_;
};

/// Single-threaded deterministic scheduler: FIFO queues both ways,
/// master-to-slave drained first, frames dropped once the receiver is
/// terminal. Throws Error on deadlock (neither side terminal, no
/// frames in flight).
std::pair<SessionSummary, SessionSummary> run_lockstep(const HarnessConfig& master_cfg,
                                                       const HarnessConfig& slave_cfg,
                                                       EveTap* eve = nullptr);

/// True iff the log is phase-safe: no DATA line before both a TX and
/// an RX KEY_CONFIRM line have appeared.
bool validate_transcript(const std::vector<std::string>& transcript);

/// Blocking frame IO over a connected stream socket. Owns the fd.
class SocketTransport {
 public:
  explicit SocketTransport(int fd) : fd_(fd) {}
  ~SocketTransport();
  SocketTransport(SocketTransport&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  SocketTransport& operator=(SocketTransport&&) = delete;
  SocketTransport(const SocketTransport&) = delete;

  void send_frame(const Frame& f);
  /// std::nullopt on orderly close at a frame boundary.
  std::optional<Frame> recv_frame();
  /// Half-closes the write side so the peer sees EOF after our last frame.
  void shutdown_write();

 private:
  int fd_ = -1;
};

/// 127.0.0.1 helpers. tcp_listen with port=0 picks an ephemeral port
/// and writes it back.
int tcp_listen(std::uint16_t& port);
int tcp_accept(int listen_fd);
int tcp_connect(std::uint16_t port);

/// Pumps one endpoint over a socket until it terminates.
SessionSummary run_over_socket(Endpoint& ep, SocketTransport& io);

/// Bidirectional relay with Eve on the master-to-slave leg. Returns
/// when both directions close. Uses two threads internally.
void run_eve_proxy(SocketTransport& master_side, SocketTransport& slave_side, EveTap& eve);

}  // namespace qaes
