#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qaes/bb84.hpp"
#include "qaes/container.hpp"
#include "qaes/dqsbox.hpp"
#include "qaes/harness.hpp"
#include "qaes/qaes_modes.hpp"
#include "qaes/sha256.hpp"
#include "qaes/util.hpp"

namespace {

using namespace qaes;

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitKeyFailure = 3;
constexpr int kExitAbort = 4;

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// Either a key file (bits as recorded) or a BB84 config (bits pumped
// on demand, replayably).
struct KeySource {
  bool from_config = false;
  Bb84Config cfg;
  KeyFile keyfile;
  std::uint64_t digest = 0;
  std::uint64_t seed = 0;
};

KeySource resolve_key_source(const std::string& key_path, const std::string& config_path) {
  if (key_path.empty() == config_path.empty())
    throw FormatError("pass exactly one of --key and --config");
  KeySource src;
  if (!config_path.empty()) {
    src.from_config = true;
    src.cfg = bb84_config_from_file(config_path);
    src.digest = config_digest(src.cfg);
    src.seed = src.cfg.rng_seed;
  } else {
    src.keyfile = read_key_file(key_path);
    src.digest = src.keyfile.config_digest;
  }
  return src;
}

BitString source_bits(const KeySource& src, std::size_t need) {
  if (src.from_config) return pump_stream(src.cfg, need);
  if (src.keyfile.bits.size() < need)
    throw KeyDepletionError("key file holds " + std::to_string(src.keyfile.bits.size()) +
                            " bits, need " + std::to_string(need));
  return src.keyfile.bits;
}

Block parse_nonce(const std::string& hex) {
  const auto bytes = from_hex(hex);
  if (bytes.size() != 16) throw FormatError("--nonce must be 32 hex digits");
  Block n;
  std::memcpy(n.data(), bytes.data(), 16);
  return n;
}

// Deterministic default nonce: digest of the key-source identity and
// the message. Distinct messages get distinct nonces; re-encrypting
// the same message with the same key reproduces the same container.
Block derive_nonce(std::uint64_t source_digest, std::span<const std::uint8_t> message) {
  std::vector<std::uint8_t> buf;
  put_u64be(buf, source_digest);
  buf.insert(buf.end(), message.begin(), message.end());
  const auto h = sha256(buf);
  Block n;
  std::memcpy(n.data(), h.data(), 16);
  return n;
}

std::size_t offline_need(int key_len) { return 256 + static_cast<std::size_t>(key_len); }

int cmd_keygen(const std::string& config_path, const std::string& out_path) {
  const Bb84Config cfg = bb84_config_from_file(config_path);
  const Bb84SessionResult r = run_session(cfg);
  if (r.aborted) {
    std::fprintf(stderr, "session aborted: QBER %.4f above threshold %.4f\n", r.qber_estimate,
                 cfg.qber_abort_threshold);
    return kExitAbort;
  }
  write_key_file(out_path, KeyFile{config_digest(cfg), r.qber_estimate, r.sifted_key});
  std::printf("wrote %zu key bits to %s (sifted %zu of %zu pumped, QBER %.4f, t_qkg %.4f ms)\n",
              r.sifted_key.size(), out_path.c_str(), r.n_sifted, cfg.n_pump, r.qber_estimate,
              r.t_qkg);
  return kExitOk;
}

int cmd_encrypt(const std::string& in_path, const std::string& out_path,
                const std::string& key_path, const std::string& config_path,
                const std::string& mode_str, int key_len, const std::string& bm_str,
                const std::string& nonce_hex) {
  const auto plaintext = read_file(in_path);
  const QaesMode mode = mode_str == "online" ? QaesMode::online : QaesMode::offline;
  const BlockMode bm = block_mode_from_string(bm_str);
  const CipherParams params = params_for_key_len(key_len);
  const KeySource src = resolve_key_source(key_path, config_path);

  const std::size_t need =
      mode == QaesMode::offline
          ? offline_need(key_len)
          : online_bits_needed(message_blocks(plaintext.size(), bm, false), params,
                               KeyRefresh::per_block, BoxRefresh::per_message);
  const BitString bits = source_bits(src, need);
  const Block nonce = nonce_hex.empty() ? derive_nonce(src.digest, plaintext)
                                        : parse_nonce(nonce_hex);

  std::vector<std::uint8_t> cipher;
  if (mode == QaesMode::offline) {
    QaesContext ctx = QaesContext::offline_init(bits, key_len, bm);
    cipher = ctx.encrypt_message(plaintext, nonce);
  } else {
    QaesContext ctx = QaesContext::online_init(QuantumKeyStream{bits}, key_len, bm);
    cipher = ctx.encrypt_message(plaintext, nonce);
  }

  ContainerHeader header;
  header.mode = mode;
  header.key_len = key_len;
  header.block_mode = bm;
  header.nonce = nonce;
  header.payload_len = cipher.size();
  std::optional<SessionRecord> record;
  if (mode == QaesMode::online) record = SessionRecord{src.seed, src.digest};

  const auto out = encode_container(header, record, cipher);
  write_file(out_path, out);
  std::printf("%s: %zu plaintext bytes -> %zu container bytes (%s, %d-bit, %s)\n",
              out_path.c_str(), plaintext.size(), out.size(), to_string(mode), key_len,
              to_string(bm));
  return kExitOk;
}

int cmd_decrypt(const std::string& in_path, const std::string& out_path,
                const std::string& key_path, const std::string& config_path) {
  const auto bytes = read_file(in_path);
  const Container c = decode_container(bytes);
  const KeySource src = resolve_key_source(key_path, config_path);
  const CipherParams params = params_for_key_len(c.header.key_len);

  std::size_t need = offline_need(c.header.key_len);
  if (c.header.mode == QaesMode::online) {
    if (c.record->config_digest != src.digest)
      throw KeyDepletionError("key source does not match the container's session record");
    need = online_bits_needed(message_blocks(c.body.size(), c.header.block_mode, true), params,
                              KeyRefresh::per_block, BoxRefresh::per_message);
  }
  const BitString bits = source_bits(src, need);

  std::vector<std::uint8_t> plain;
  if (c.header.mode == QaesMode::offline) {
    QaesContext ctx = QaesContext::offline_init(bits, c.header.key_len, c.header.block_mode);
    plain = ctx.decrypt_message(c.body, c.header.nonce);
  } else {
    QaesContext ctx = QaesContext::online_init(QuantumKeyStream{bits}, c.header.key_len,
                                               c.header.block_mode);
    plain = ctx.decrypt_message(c.body, c.header.nonce);
  }
  write_file(out_path, plain);
  std::printf("%s: %zu container bytes -> %zu plaintext bytes\n", out_path.c_str(), bytes.size(),
              plain.size());
  return kExitOk;
}

DqsBox box_from_seed(std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::array<std::uint8_t, 32> km{};
  rng.fill_bytes(km);
  return generate_box(km);
}

int cmd_sbox_analyze(const std::string& grid_a_path, const std::string& grid_b_path,
                     std::uint64_t seed_a, std::uint64_t seed_b, bool seeds_given,
                     const std::string& csv_path) {
  Grid16 a, b;
  bool have_boxes = false;
  DqsBox box_a, box_b;
  if (seeds_given) {
    box_a = box_from_seed(seed_a);
    box_b = box_from_seed(seed_b);
    a = grid16_from_box(box_a.forward);
    b = grid16_from_box(box_b.forward);
    have_boxes = true;
  } else {
    if (grid_a_path.empty() || grid_b_path.empty())
      throw FormatError("pass two fixture files or --seed-a/--seed-b");
    a = load_grid16(grid_a_path);
    b = load_grid16(grid_b_path);
  }

  const CorrelationProfile p = correlation_profile(a, b);

  std::printf("row  pearson    corr       std_dot    independence\n");
  for (std::size_t r = 0; r < 16; ++r) {
    const auto& rc = p.rows[r];
    if (rc.degenerate) {
      std::printf("%3zu  degenerate row (zero spread), excluded\n", r);
      continue;
    }
    std::printf("%3zu  %+.6f  %.6f   %+.6f  %10.4f\n", r, rc.pearson, rc.corr,
                rc.standardized_dot, rc.independence);
  }
  std::printf("mean independence: %.4f%% over %zu rows (%zu degenerate)\n", p.mean_independence,
              16 - p.degenerate_count, p.degenerate_count);
  std::printf("spread ratio (range/4 of CORR over peak of grid A): %.6f\n", eq4_ratio(p, a));
  if (have_boxes) {
    const auto da = box_diagnostics(box_a.forward);
    const auto db = box_diagnostics(box_b.forward);
    std::printf("box A: fixed points %d, differential uniformity %d\n", da.fixed_points,
                da.differential_uniformity);
    std::printf("box B: fixed points %d, differential uniformity %d\n", db.fixed_points,
                db.differential_uniformity);
  }

  if (!csv_path.empty()) {
    std::string csv = "row,pearson,corr,standardized_dot,independence,degenerate\n";
    char line[160];
    for (std::size_t r = 0; r < 16; ++r) {
      const auto& rc = p.rows[r];
      std::snprintf(line, sizeof(line), "%zu,%.9f,%.9f,%.9f,%.9f,%d\n", r, rc.pearson, rc.corr,
                    rc.standardized_dot, rc.independence, rc.degenerate ? 1 : 0);
      csv += line;
    }
    std::snprintf(line, sizeof(line), "# mean_independence=%.9f\n", p.mean_independence);
    csv += line;
    std::snprintf(line, sizeof(line), "# eq4_ratio=%.9f\n", eq4_ratio(p, a));
    csv += line;
    write_text_file(csv_path, csv);
  }
  return kExitOk;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_bench(std::vector<std::size_t> sizes_kb, int key_len, const std::string& algo,
              std::size_t repeats, const std::string& out_path, std::uint64_t seed) {
  if (sizes_kb.empty()) throw FormatError("--sizes must not be empty");
  if (repeats == 0) throw FormatError("--repeats must be positive");

  Bb84Config cfg;  // defaults: 500 pumped, 0.05 noise
  cfg.rng_seed = seed;
  const std::size_t need = offline_need(key_len);

  std::string csv =
      "# kb = KiB (1024 bytes); timings in milliseconds; medians over repeats\n"
      "algo,key_len,file_size_kb,t_qkg_ms,t_qkg_model_ms,t_enc_ms,t_total_ms,t_total_spread_ms\n";
  char line[256];

  for (std::size_t kb : sizes_kb) {
    std::vector<std::uint8_t> data(kb * 1024);
    Xoshiro256 drng(seed ^ (0x9e3779b97f4a7c15ull * (kb + 1)));
    drng.fill_bytes(data);
    const Block nonce = derive_nonce(seed, data);

    for (const char* row_algo : {"AES", "QAES"}) {
      if (algo == "aes" && std::strcmp(row_algo, "AES") != 0) continue;
      if (algo == "qaes" && std::strcmp(row_algo, "QAES") != 0) continue;
      const bool quantum = std::strcmp(row_algo, "QAES") == 0;

      std::array<std::uint8_t, 32> classical_key{};
      Xoshiro256 krng(seed + 17);
      krng.fill_bytes(classical_key);
      const std::span<const std::uint8_t> key_bytes(classical_key.data(),
                                                    static_cast<std::size_t>(key_len) / 8);

      std::vector<double> t_qkg, t_enc, t_total;
      double t_model = 0.0;
      for (std::size_t r = 0; r < repeats; ++r) {
        if (quantum) {
          auto t0 = std::chrono::steady_clock::now();
          const BitString bits = pump_stream(cfg, need);
          t_qkg.push_back(ms_since(t0));
          t_model = t_qkg_model(cfg, bits.size());

          t0 = std::chrono::steady_clock::now();
          QaesContext ctx = QaesContext::offline_init(bits, key_len, BlockMode::ctr);
          const auto cipher = ctx.encrypt_message(data, nonce);
          t_enc.push_back(ms_since(t0));
          if (cipher.size() != data.size()) throw Error("bench ciphertext size mismatch");

          t0 = std::chrono::steady_clock::now();
          const BitString bits2 = pump_stream(cfg, need);
          QaesContext ctx2 = QaesContext::offline_init(bits2, key_len, BlockMode::ctr);
          const auto cipher2 = ctx2.encrypt_message(data, nonce);
          t_total.push_back(ms_since(t0));
          if (cipher2 != cipher) throw Error("bench pipeline not deterministic");
        } else {
          auto t0 = std::chrono::steady_clock::now();
          QaesContext ctx = QaesContext::offline_with_standard_sbox(key_bytes, key_len,
                                                                    BlockMode::ctr);
          const auto cipher = ctx.encrypt_message(data, nonce);
          t_enc.push_back(ms_since(t0));
          if (cipher.size() != data.size()) throw Error("bench ciphertext size mismatch");

          t0 = std::chrono::steady_clock::now();
          QaesContext ctx2 = QaesContext::offline_with_standard_sbox(key_bytes, key_len,
                                                                     BlockMode::ctr);
          const auto cipher2 = ctx2.encrypt_message(data, nonce);
          t_total.push_back(ms_since(t0));
          if (cipher2 != cipher) throw Error("bench pipeline not deterministic");
          t_qkg.push_back(0.0);
          t_model = 0.0;
        }
      }

      const double spread =
          *std::max_element(t_total.begin(), t_total.end()) -
          *std::min_element(t_total.begin(), t_total.end());
      std::snprintf(line, sizeof(line), "%s,%d,%zu,%.4f,%.4f,%.4f,%.4f,%.4f\n", row_algo, key_len,
                    kb, median(t_qkg), t_model, median(t_enc), median(t_total), spread);
      csv += line;
    }
  }

  if (out_path.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_text_file(out_path, csv);
    std::printf("wrote benchmark CSV to %s\n", out_path.c_str());
  }
  return kExitOk;
}

int exit_code_for(const SessionSummary& s) {
  switch (s.state) {
    case TerminalState::finished: return kExitOk;
    case TerminalState::aborted_qber:
    case TerminalState::aborted_digest:
    case TerminalState::aborted_key_depleted: return kExitAbort;
    default: return kExitBadInput;
  }
}

void print_summary(const SessionSummary& s) {
  std::printf("%s: %s", to_string(s.role), to_string(s.state));
  if (s.state != TerminalState::finished)
    std::printf(" (reason %d)", static_cast<int>(s.abort_reason));
  std::printf(", QBER %.4f, sifted %zu, key bits %zu, key digest %016llx, data bytes %zu\n",
              s.qber_estimate, s.n_sifted, s.usable_bits,
              static_cast<unsigned long long>(s.key_digest), s.data_bytes);
}

int cmd_demo(const std::string& role, std::uint16_t port, std::uint16_t peer_port,
             const std::string& config_path, const std::string& in_path,
             const std::string& out_path, const std::string& transcript_path, int key_len,
             const std::string& mode_str, const std::string& bm_str, const std::string& nonce_hex,
             double eve_fraction, std::uint64_t eve_seed) {
  if (role == "eve") {
    std::uint16_t listen_port = port;
    const int lfd = tcp_listen(listen_port);
    std::printf("eve: listening on 127.0.0.1:%u, forwarding to %u (fraction %.2f)\n", listen_port,
                peer_port, eve_fraction);
    SocketTransport master_side(tcp_accept(lfd));
    ::close(lfd);
    SocketTransport slave_side(tcp_connect(peer_port));
    EveTap eve(eve_fraction, eve_seed);
    run_eve_proxy(master_side, slave_side, eve);
    return kExitOk;
  }

  const Bb84Config bb84 = config_path.empty() ? Bb84Config{} : bb84_config_from_file(config_path);
  HarnessConfig cfg;
  cfg.rng_seed = bb84.rng_seed;
  cfg.n_pump = bb84.n_pump;
  cfg.p_noise = bb84.p_noise;
  cfg.sacrifice_fraction = bb84.sacrifice_fraction;
  cfg.qber_abort_threshold = bb84.qber_abort_threshold;

  if (role == "master") {
    cfg.role = Role::master;
    cfg.key_len = key_len;
    cfg.data_mode = mode_str == "online" ? QaesMode::online : QaesMode::offline;
    cfg.data_block_mode = block_mode_from_string(bm_str);
    cfg.payload = in_path.empty()
                      ? std::vector<std::uint8_t>{'q', 'a', 'e', 's', ' ', 'd', 'e', 'm', 'o', '\n'}
                      : read_file(in_path);
    cfg.nonce = nonce_hex.empty() ? derive_nonce(cfg.rng_seed, cfg.payload)
                                  : parse_nonce(nonce_hex);
  } else {
    cfg.role = Role::slave;
  }

  SessionSummary summary;
  if (role == "master") {
    Endpoint ep(cfg);
    SocketTransport io(tcp_connect(port));
    summary = run_over_socket(ep, io);
  } else {
    std::uint16_t listen_port = port;
    const int lfd = tcp_listen(listen_port);
    std::printf("slave: listening on 127.0.0.1:%u\n", listen_port);
    Endpoint ep(cfg);
    SocketTransport io(tcp_accept(lfd));
    ::close(lfd);
    summary = run_over_socket(ep, io);
    if (!out_path.empty() && summary.state == TerminalState::finished)
      write_file(out_path, summary.received);
  }

  if (!transcript_path.empty()) {
    std::string text;
    for (const auto& l : summary.transcript) {
      text += l;
      text += '\n';
    }
    write_text_file(transcript_path, text);
  }
  print_summary(summary);
  return exit_code_for(summary);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QAES: AES with quantum-refreshed S-boxes over BB84 key distribution"};
  app.require_subcommand(1);

  std::string config_path, key_path, in_path, out_path, nonce_hex, csv_path, transcript_path;
  std::string mode_str = "offline", bm_str = "ctr", algo = "both", role;
  int key_len = 128;
  std::uint64_t seed_a = 0, seed_b = 0, bench_seed = 42, eve_seed = 7;
  double eve_fraction = 1.0;
  std::uint16_t port = 0, peer_port = 0;
  std::vector<std::size_t> sizes_kb = {500, 1000, 1500, 2000, 3500};
  std::size_t repeats = 5;
  std::string grid_a, grid_b;

  auto* keygen = app.add_subcommand("keygen", "Run one BB84 session and store its usable key");
  keygen->add_option("--config", config_path, "BB84 config file")->required();
  keygen->add_option("--out", out_path, "key file to write")->required();

  auto* enc = app.add_subcommand("encrypt", "Encrypt a file into a QAES container");
  enc->add_option("--in", in_path)->required();
  enc->add_option("--out", out_path)->required();
  enc->add_option("--key", key_path, "key file from keygen");
  enc->add_option("--config", config_path, "BB84 config (pumps the stream on demand)");
  enc->add_option("--mode", mode_str)->check(CLI::IsMember({"offline", "online"}));
  enc->add_option("--key-len", key_len)->check(CLI::IsMember({128, 192, 256}));
  enc->add_option("--block-mode", bm_str)->check(CLI::IsMember({"ctr", "cfb", "ofb", "raw"}));
  enc->add_option("--nonce", nonce_hex, "32 hex digits; derived from key+message when absent");

  auto* dec = app.add_subcommand("decrypt", "Decrypt a QAES container");
  dec->add_option("--in", in_path)->required();
  dec->add_option("--out", out_path)->required();
  dec->add_option("--key", key_path);
  dec->add_option("--config", config_path);

  auto* ana = app.add_subcommand("sbox-analyze", "Row-correlation report over two 16x16 boxes");
  ana->add_option("grid-a", grid_a, "hex fixture file");
  ana->add_option("grid-b", grid_b, "hex fixture file");
  auto* opt_sa = ana->add_option("--seed-a", seed_a, "generate box A from this seed");
  auto* opt_sb = ana->add_option("--seed-b", seed_b, "generate box B from this seed");
  ana->add_option("--csv", csv_path, "write machine-readable CSV here");

  auto* bench = app.add_subcommand("bench", "Timing benchmark, CSV output");
  bench->add_option("--sizes", sizes_kb, "file sizes in KiB");
  bench->add_option("--key-len", key_len)->check(CLI::IsMember({128, 192, 256}));
  bench->add_option("--algo", algo)->check(CLI::IsMember({"aes", "qaes", "both"}));
  bench->add_option("--repeats", repeats);
  bench->add_option("--out", out_path, "CSV path (stdout when absent)");
  bench->add_option("--seed", bench_seed);

  auto* demo = app.add_subcommand("demo", "Two-party negotiation over localhost TCP");
  demo->add_option("--role", role)->required()->check(CLI::IsMember({"master", "slave", "eve"}));
  demo->add_option("--port", port, "slave/eve: listen port; master: port to connect")->required();
  demo->add_option("--peer-port", peer_port, "eve: upstream slave port");
  demo->add_option("--config", config_path, "BB84 config for this party");
  demo->add_option("--in", in_path, "master: file to transfer");
  demo->add_option("--out", out_path, "slave: where to store the received file");
  demo->add_option("--transcript", transcript_path, "write the frame transcript here");
  demo->add_option("--key-len", key_len)->check(CLI::IsMember({128, 192, 256}));
  demo->add_option("--mode", mode_str)->check(CLI::IsMember({"offline", "online"}));
  demo->add_option("--block-mode", bm_str)->check(CLI::IsMember({"ctr", "cfb", "ofb", "raw"}));
  demo->add_option("--nonce", nonce_hex);
  demo->add_option("--eve-fraction", eve_fraction);
  demo->add_option("--eve-seed", eve_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (app.got_subcommand(keygen)) return cmd_keygen(config_path, out_path);
    if (app.got_subcommand(enc))
      return cmd_encrypt(in_path, out_path, key_path, config_path, mode_str, key_len, bm_str,
                         nonce_hex);
    if (app.got_subcommand(dec)) return cmd_decrypt(in_path, out_path, key_path, config_path);
    if (app.got_subcommand(ana))
      return cmd_sbox_analyze(grid_a, grid_b, seed_a, seed_b,
                              opt_sa->count() > 0 || opt_sb->count() > 0, csv_path);
    if (app.got_subcommand(bench))
      return cmd_bench(sizes_kb, key_len, algo, repeats, out_path, bench_seed);
    if (app.got_subcommand(demo))
      return cmd_demo(role, port, peer_port, config_path, in_path, out_path, transcript_path,
                      key_len, mode_str, bm_str, nonce_hex, eve_fraction, eve_seed);
  } catch (const KeyDepletionError& e) {
    std::fprintf(stderr, "key failure: %s\n", e.what());
    return kExitKeyFailure;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "bad input: %s\n", e.what());
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "bad input: %s\n", e.what());
    return kExitBadInput;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitKeyFailure;
  }
  return kExitBadInput;
}
