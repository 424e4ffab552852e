#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qaes/rng.hpp"
#include "qaes/util.hpp"

namespace qaes {

struct Bb84Config {
  std::size_t n_pump = 500;
  double p_noise = 0.05;
  double eve_fraction = 0.0;
  double sacrifice_fraction = 0.20;
  double qber_abort_threshold = 0.11;
  std::uint64_t rng_seed = 42;
};

/// Throws std::invalid_argument when a field is out of range
/// (fractions outside [0,1], sacrifice outside (0,1), n_pump < 16).
void validate(const Bb84Config& cfg);

Bb84Config bb84_config_from_map(const std::map<std::string, std::string>& kv);
Bb84Config bb84_config_from_file(const std::string& path);

/// Stable 64-bit digest of every config field, used to tie key files
/// and session records back to the exact parameters that made them.
std::uint64_t config_digest(const Bb84Config& cfg);

/// One photon in flight: a bit encoded in a basis (0 rectilinear,
/// 1 diagonal).
struct Qubit {
  std::uint8_t bit = 0;
  std::uint8_t basis = 0;
};

/// Projective measurement. A matched basis reads the bit faithfully;
/// a mismatch yields a fair coin and the qubit collapses to the
/// measured state either way, which is what makes intercept-resend
/// detectable.
int measure_qubit(Qubit& q, int basis, Xoshiro256& rng);

struct Bb84SessionResult {
  BitString sifted_key;       // usable bits after QBER sacrifice; empty on abort
  double qber_estimate = 0.0;
  std::size_t n_sifted = 0;   // matched-basis count before sacrifice
  double t_qkg = 0.0;         // model milliseconds
  bool aborted = false;
};

/// Per-qubit record retained for replay checks.
struct QubitTrace {
  std::uint8_t sender_bit;
  std::uint8_t sender_basis;
  std::uint8_t receiver_basis;
  std::uint8_t receiver_bit;
  bool intercepted;
  bool flipped;
};

struct SessionTrace {
  std::vector<QubitTrace> qubits;
  std::vector<std::size_t> sifted_positions;   // indices into qubits
  std::vector<std::size_t> sampled_positions;  // indices into sifted_positions
};

/// Full protocol pass: pump, optional intercept-resend, channel noise,
/// measurement, sifting, seeded QBER sampling, abort decision. All
/// randomness comes from one generator seeded with rng_seed, so equal
/// configs replay bit-for-bit.
Bb84SessionResult run_session(const Bb84Config& cfg, SessionTrace* trace = nullptr);

/// Key availability in practice: chains sessions with seeds rng_seed,
/// rng_seed+1, ... and concatenates their usable bits until min_bits
/// accumulate. Aborted sessions are skipped (their seed is burned).
/// Throws KeyDepletionError after max_sessions attempts. Deterministic,
/// so an encryptor and a decryptor pump identical streams.
BitString pump_stream(const Bb84Config& cfg, std::size_t min_bits,
                      std::size_t max_sessions = 4096);

/// Model key-generation time in milliseconds:
///   t = c0 + c1 * n_pump * (1 + alpha * p_noise + beta * eve_fraction)
/// calibrated so the 500-qubit, 0.05-noise, no-Eve point returns
/// exactly 0.23. usable_bits is validated but does not move the model;
/// the fit is over pumped qubits.
double t_qkg_model(const Bb84Config& cfg, std::size_t usable_bits);

/// Single-consumer cursor over usable key bits. Bits are served once,
/// in order, and never re-read.
class QuantumKeyStream {
 public:
  QuantumKeyStream() = default;
  explicit QuantumKeyStream(BitString bits) : bits_(std::move(bits)) {}

  /// Throws KeyDepletionError (cursor untouched) when fewer than n
  /// bits remain; the caller should run another session and append.
  BitString take_bits(std::size_t n);
  std::vector<std::uint8_t> take_bytes(std::size_t n);

  void append(const BitString& more);

  std::size_t remaining() const { return bits_.size() - cursor_; }
  std::size_t consumed() const { return cursor_; }
  std::size_t size() const { return bits_.size(); }

 private:
  BitString bits_;
  std::size_t cursor_ = 0;
};

}  // namespace qaes
