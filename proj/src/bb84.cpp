#include "qaes/bb84.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace qaes {

namespace {

double parse_double_field(const std::map<std::string, std::string>& kv, const std::string& key,
                          double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad numeric value for '" + key + "': " + it->second);
  }
}

std::uint64_t parse_u64_field(const std::map<std::string, std::string>& kv, const std::string& key,
                              std::uint64_t fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad integer value for '" + key + "': " + it->second);
  }
}

// Pump load used by the timing model. Computed identically for the
// live config and the calibration point so the calibration difference
// cancels bitwise.
double pump_load(const Bb84Config& cfg) {
  constexpr double kAlpha = 2.0;
  constexpr double kBeta = 1.0;
  return static_cast<double>(cfg.n_pump) * (1.0 + kAlpha * cfg.p_noise + kBeta * cfg.eve_fraction);
}

Bb84Config calibration_config() {
  Bb84Config c;
  c.n_pump = 500;
  c.p_noise = 0.05;
  c.eve_fraction = 0.0;
  return c;
}

}  // namespace

void validate(const Bb84Config& cfg) {
  if (cfg.n_pump < 16) throw std::invalid_argument("n_pump must be at least 16");
  if (!(cfg.p_noise >= 0.0 && cfg.p_noise <= 1.0))
    throw std::invalid_argument("p_noise must lie in [0,1]");
  if (!(cfg.eve_fraction >= 0.0 && cfg.eve_fraction <= 1.0))
    throw std::invalid_argument("eve_fraction must lie in [0,1]");
  if (!(cfg.sacrifice_fraction > 0.0 && cfg.sacrifice_fraction < 1.0))
    throw std::invalid_argument("sacrifice_fraction must lie in (0,1)");
  if (!(cfg.qber_abort_threshold >= 0.0 && cfg.qber_abort_threshold <= 1.0))
    throw std::invalid_argument("qber_abort_threshold must lie in [0,1]");
}

Bb84Config bb84_config_from_map(const std::map<std::string, std::string>& kv) {
  static const char* const known[] = {"n_pump",             "p_noise",
                                      "eve_fraction",       "sacrifice_fraction",
                                      "qber_abort_threshold", "rng_seed"};
  for (const auto& [key, value] : kv) {
    (void)value;
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* k) { return key == k; }) == std::end(known))
      throw FormatError("unknown config key '" + key + "'");
  }

  Bb84Config cfg;
  cfg.n_pump = static_cast<std::size_t>(parse_u64_field(kv, "n_pump", cfg.n_pump));
  cfg.p_noise = parse_double_field(kv, "p_noise", cfg.p_noise);
  cfg.eve_fraction = parse_double_field(kv, "eve_fraction", cfg.eve_fraction);
  cfg.sacrifice_fraction = parse_double_field(kv, "sacrifice_fraction", cfg.sacrifice_fraction);
  cfg.qber_abort_threshold =
      parse_double_field(kv, "qber_abort_threshold", cfg.qber_abort_threshold);
  cfg.rng_seed = parse_u64_field(kv, "rng_seed", cfg.rng_seed);
  validate(cfg);
  return cfg;
}

Bb84Config bb84_config_from_file(const std::string& path) {
  return bb84_config_from_map(load_key_values(path));
}

std::uint64_t config_digest(const Bb84Config& cfg) {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%zu|%.17g|%.17g|%.17g|%.17g|%llu", cfg.n_pump, cfg.p_noise,
                cfg.eve_fraction, cfg.sacrifice_fraction, cfg.qber_abort_threshold,
                static_cast<unsigned long long>(cfg.rng_seed));
  return fnv1a64(std::string(buf));
}

int measure_qubit(Qubit& q, int basis, Xoshiro256& rng) {
  const int outcome = (q.basis == basis) ? q.bit : rng.next_bit();
  q.bit = static_cast<std::uint8_t>(outcome);
  q.basis = static_cast<std::uint8_t>(basis);
  return outcome;
}

Bb84SessionResult run_session(const Bb84Config& cfg, SessionTrace* trace) {
  validate(cfg);
  Xoshiro256 rng(cfg.rng_seed);

  std::vector<std::uint8_t> sender_bits(cfg.n_pump);
  std::vector<std::uint8_t> receiver_bits(cfg.n_pump);
  std::vector<std::uint8_t> matched(cfg.n_pump);
  if (trace) trace->qubits.reserve(cfg.n_pump);

  // Fixed per-qubit draw order keeps transcripts replayable: sender
  // bit, sender basis, Eve decision (always), Eve basis + collapse if
  // intercepting, noise decision (always), receiver basis + collapse.
  for (std::size_t i = 0; i < cfg.n_pump; ++i) {
    Qubit q;
    q.bit = static_cast<std::uint8_t>(rng.next_bit());
    q.basis = static_cast<std::uint8_t>(rng.next_bit());
    const std::uint8_t sender_bit = q.bit;
    const std::uint8_t sender_basis = q.basis;

    const bool intercepted = rng.bernoulli(cfg.eve_fraction);
    if (intercepted) measure_qubit(q, rng.next_bit(), rng);

    const bool flipped = rng.bernoulli(cfg.p_noise);
    if (flipped) q.bit ^= 1;

    const int receiver_basis = rng.next_bit();
    const int received = measure_qubit(q, receiver_basis, rng);

    sender_bits[i] = sender_bit;
    receiver_bits[i] = static_cast<std::uint8_t>(received);
    matched[i] = static_cast<std::uint8_t>(receiver_basis == sender_basis);
    if (trace)
      trace->qubits.push_back({sender_bit, sender_basis, static_cast<std::uint8_t>(receiver_basis),
                               static_cast<std::uint8_t>(received), intercepted, flipped});
  }

  std::vector<std::size_t> sifted;
  for (std::size_t i = 0; i < cfg.n_pump; ++i)
    if (matched[i]) sifted.push_back(i);
  if (trace) trace->sifted_positions = sifted;

  const std::size_t n_sifted = sifted.size();
  std::size_t n_sample =
      static_cast<std::size_t>(cfg.sacrifice_fraction * static_cast<double>(n_sifted) + 0.5);
  n_sample = std::min(n_sample, n_sifted);

  // Seeded partial shuffle picks the sacrificed subset; sorting the
  // picks keeps the survivor order equal to the sift order.
  std::vector<std::size_t> order(n_sifted);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < n_sample; ++i) {
    const std::size_t j = i + rng.uniform(static_cast<std::uint32_t>(n_sifted - i));
    std::swap(order[i], order[j]);
  }
  std::vector<std::size_t> sampled(order.begin(),
                                   order.begin() + static_cast<std::ptrdiff_t>(n_sample));
  std::sort(sampled.begin(), sampled.end());
  if (trace) trace->sampled_positions = sampled;

  std::size_t mismatches = 0;
  for (std::size_t s : sampled) {
    const std::size_t pos = sifted[s];
    if (sender_bits[pos] != receiver_bits[pos]) ++mismatches;
  }
  const double qber =
      n_sample ? static_cast<double>(mismatches) / static_cast<double>(n_sample) : 0.0;

  Bb84SessionResult out;
  out.qber_estimate = qber;
  out.n_sifted = n_sifted;
  out.aborted = qber > cfg.qber_abort_threshold;
  if (!out.aborted) {
    std::size_t next_sampled = 0;
    for (std::size_t s = 0; s < n_sifted; ++s) {
      if (next_sampled < sampled.size() && sampled[next_sampled] == s) {
        ++next_sampled;
        continue;
      }
      out.sifted_key.append_bit(sender_bits[sifted[s]]);
    }
  }
  out.t_qkg = t_qkg_model(cfg, out.sifted_key.size());
  return out;
}

BitString pump_stream(const Bb84Config& cfg, std::size_t min_bits, std::size_t max_sessions) {
  BitString bits;
  Bb84Config session_cfg = cfg;
  for (std::size_t i = 0; i < max_sessions && bits.size() < min_bits; ++i) {
    session_cfg.rng_seed = cfg.rng_seed + i;
    const auto result = run_session(session_cfg);
    if (!result.aborted) bits.append(result.sifted_key);
  }
  if (bits.size() < min_bits)
    throw KeyDepletionError("pumped " + std::to_string(max_sessions) + " sessions but only " +
                            std::to_string(bits.size()) + " of " + std::to_string(min_bits) +
                            " bits accumulated");
  return bits;
}

double t_qkg_model(const Bb84Config& cfg, std::size_t usable_bits) {
  (void)usable_bits;
  constexpr double kC1 = 4e-4;    // ms per load unit
  constexpr double kTCal = 0.23;  // ms at the calibration point
  const double load_cal = pump_load(calibration_config());
  return kTCal + kC1 * (pump_load(cfg) - load_cal);
}

BitString QuantumKeyStream::take_bits(std::size_t n) {
  if (n == 0) throw std::invalid_argument("take_bits needs n > 0");
  if (n > remaining())
    throw KeyDepletionError("key stream exhausted: need " + std::to_string(n) + " bits, have " +
                            std::to_string(remaining()));
  BitString out = bits_.slice(cursor_, n);
  cursor_ += n;
  return out;
}

std::vector<std::uint8_t> QuantumKeyStream::take_bytes(std::size_t n) {
  return take_bits(8 * n).to_bytes();
}

void QuantumKeyStream::append(const BitString& more) { bits_.append(more); }

}  // namespace qaes
