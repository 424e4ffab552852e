#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "qaes/bb84.hpp"
#include "qaes/container.hpp"
#include "qaes/util.hpp"

using namespace qaes;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("qaes_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QAES_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string fixture(const char* name) {
  return std::string(QAES_FIXTURE_DIR) + "/" + name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
  REQUIRE(out.good());
}

ContainerHeader sample_header(QaesMode mode) {
  ContainerHeader h;
  h.mode = mode;
  h.key_len = 192;
  h.block_mode = BlockMode::cfb;
  for (int i = 0; i < 16; ++i) h.nonce[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  return h;
}

}  // namespace

TEST_CASE("container roundtrips offline and online") {
  const std::vector<std::uint8_t> body{9, 8, 7, 6, 5};

  auto h = sample_header(QaesMode::offline);
  h.payload_len = body.size();
  const auto off = encode_container(h, std::nullopt, body);
  CHECK(off.size() == kHeaderSize + body.size());
  const Container c = decode_container(off);
  CHECK(c.header.mode == QaesMode::offline);
  CHECK(c.header.key_len == 192);
  CHECK(c.header.block_mode == BlockMode::cfb);
  CHECK(c.header.nonce == h.nonce);
  CHECK_FALSE(c.record.has_value());
  CHECK(c.body == body);

  auto h2 = sample_header(QaesMode::online);
  h2.payload_len = body.size();
  const SessionRecord rec{0x1122334455667788ull, 0xaabbccddeeff0011ull};
  const auto on = encode_container(h2, rec, body);
  CHECK(on.size() == kHeaderSize + kSessionRecordSize + body.size());
  const Container c2 = decode_container(on);
  REQUIRE(c2.record.has_value());
  CHECK(c2.record->seed == rec.seed);
  CHECK(c2.record->config_digest == rec.config_digest);
  CHECK(c2.body == body);
}

TEST_CASE("container record presence is tied to the mode") {
  auto h = sample_header(QaesMode::offline);
  const SessionRecord rec{1, 2};
  CHECK_THROWS_AS(encode_container(h, rec, {}), std::invalid_argument);
  auto h2 = sample_header(QaesMode::online);
  CHECK_THROWS_AS(encode_container(h2, std::nullopt, {}), std::invalid_argument);
}

TEST_CASE("container decode rejects damage") {
  auto h = sample_header(QaesMode::offline);
  const std::vector<std::uint8_t> body{1, 2, 3};
  h.payload_len = body.size();
  const auto good = encode_container(h, std::nullopt, body);

  auto bad = good;
  bad[0] = 'X';  // magic
  CHECK_THROWS_AS(decode_container(bad), FormatError);

  bad = good;
  bad[4] = 9;  // version
  CHECK_THROWS_AS(decode_container(bad), FormatError);

  bad = good;
  bad[5] = 7;  // mode
  CHECK_THROWS_AS(decode_container(bad), FormatError);

  bad = good;
  bad[6] = 3;  // key length code
  CHECK_THROWS_AS(decode_container(bad), FormatError);

  bad = good;
  bad.pop_back();  // body shorter than payload_len
  CHECK_THROWS_AS(decode_container(bad), FormatError);

  bad = good;
  bad.push_back(0);  // trailing garbage
  CHECK_THROWS_AS(decode_container(bad), FormatError);

  CHECK_THROWS_AS(decode_container(std::vector<std::uint8_t>(10)), FormatError);
}

TEST_CASE("reserved header bytes are written zero and ignored on read") {
  auto h = sample_header(QaesMode::offline);
  const std::vector<std::uint8_t> body{5};
  h.payload_len = 1;
  auto wire = encode_container(h, std::nullopt, body);
  for (std::size_t i = 24; i < 40; ++i) CHECK(wire[i] == 0);
  for (std::size_t i = 24; i < 40; ++i) wire[i] = 0xee;
  const Container c = decode_container(wire);
  CHECK(c.body == body);
}

TEST_CASE("key file roundtrips odd bit counts exactly") {
  Xoshiro256 rng(314);
  KeyFile kf;
  kf.config_digest = 0xdeadbeefcafef00dull;
  kf.qber = 0.034483;
  kf.bits = rng.random_bits(183);

  const auto path = (work_dir() / "roundtrip.qkey").string();
  write_key_file(path, kf);
  const KeyFile back = read_key_file(path);
  CHECK(back.config_digest == kf.config_digest);
  CHECK(back.qber == doctest::Approx(kf.qber).epsilon(1e-6));
  CHECK(back.bits == kf.bits);
  CHECK(back.bits.size() == 183);
}

TEST_CASE("key file parser rejects malformed input") {
  const auto p1 = work_dir() / "bad1.qkey";
  write_text(p1, "not a key file\n00ff\n");
  CHECK_THROWS_AS(read_key_file(p1.string()), FormatError);

  const auto p2 = work_dir() / "bad2.qkey";
  write_text(p2, "# qaes key config=0011223344556677 qber=0.010000 bits=64\nzz11\n");
  CHECK_THROWS_AS(read_key_file(p2.string()), FormatError);

  const auto p3 = work_dir() / "bad3.qkey";
  write_text(p3, "# qaes key config=0011223344556677 qber=0.010000 bits=64\n00ff\n");
  CHECK_THROWS_AS(read_key_file(p3.string()), FormatError);  // 16 bits of hex, 64 claimed
}

TEST_CASE("cli: keygen is deterministic and self-describing") {
  const auto key1 = (work_dir() / "k1.qkey").string();
  const auto key2 = (work_dir() / "k2.qkey").string();
  CHECK(run_cli("keygen --config " + fixture("bb84_example.cfg") + " --out " + key1) == 0);
  CHECK(run_cli("keygen --config " + fixture("bb84_example.cfg") + " --out " + key2) == 0);
  CHECK(read_file(key1) == read_file(key2));

  const KeyFile kf = read_key_file(key1);
  CHECK(kf.bits.size() >= 180);
  CHECK(kf.bits.size() <= 220);
  const Bb84Config cfg = bb84_config_from_file(fixture("bb84_example.cfg"));
  CHECK(kf.config_digest == config_digest(cfg));
}

TEST_CASE("cli: config-sourced encrypt and decrypt roundtrip") {
  const auto plain = (work_dir() / "plain.bin").string();
  const auto boxed = (work_dir() / "boxed.qaes").string();
  const auto outp = (work_dir() / "plain.out").string();
  std::vector<std::uint8_t> data(3000);
  Xoshiro256 rng(1);
  rng.fill_bytes(data);
  write_file(plain, data);

  for (const char* mode : {"offline", "online"}) {
    for (const char* bm : {"ctr", "cfb", "ofb", "raw"}) {
      CAPTURE(mode);
      CAPTURE(bm);
      CHECK(run_cli("encrypt --in " + plain + " --out " + boxed + " --config " +
                    fixture("bb84_example.cfg") + " --mode " + mode + " --block-mode " + bm) == 0);
      CHECK(run_cli("decrypt --in " + boxed + " --out " + outp + " --config " +
                    fixture("bb84_example.cfg")) == 0);
      CHECK(read_file(outp) == data);
    }
  }
}

TEST_CASE("cli: key-file encrypt needs enough bits and stays symmetric") {
  const auto cfg_path = (work_dir() / "pump1500.cfg").string();
  write_text(cfg_path,
             "n_pump = 1500\np_noise = 0.05\nsacrifice_fraction = 0.20\n"
             "qber_abort_threshold = 0.11\nrng_seed = 42\n");
  const auto key = (work_dir() / "wide.qkey").string();
  REQUIRE(run_cli("keygen --config " + cfg_path + " --out " + key) == 0);

  const auto plain = (work_dir() / "p2.bin").string();
  const auto boxed = (work_dir() / "p2.qaes").string();
  const auto outp = (work_dir() / "p2.out").string();
  std::vector<std::uint8_t> data(100, 0x5a);
  write_file(plain, data);

  CHECK(run_cli("encrypt --in " + plain + " --out " + boxed + " --key " + key) == 0);
  CHECK(run_cli("decrypt --in " + boxed + " --out " + outp + " --key " + key) == 0);
  CHECK(read_file(outp) == data);

  // Online per-block demand dwarfs a single-session key file.
  CHECK(run_cli("encrypt --in " + plain + " --out " + boxed + " --key " + key +
                " --mode online") == 3);
}

TEST_CASE("cli: decrypting with the wrong source fails closed") {
  const auto plain = (work_dir() / "p3.bin").string();
  const auto boxed = (work_dir() / "p3.qaes").string();
  const auto outp = (work_dir() / "p3.out").string();
  write_file(plain, std::vector<std::uint8_t>(64, 0x11));

  REQUIRE(run_cli("encrypt --in " + plain + " --out " + boxed + " --config " +
                  fixture("bb84_example.cfg") + " --mode online") == 0);

  const auto other_cfg = (work_dir() / "other.cfg").string();
  write_text(other_cfg,
             "n_pump = 500\np_noise = 0.05\nsacrifice_fraction = 0.20\n"
             "qber_abort_threshold = 0.11\nrng_seed = 43\n");
  CHECK(run_cli("decrypt --in " + boxed + " --out " + outp + " --config " + other_cfg) == 3);

  // A damaged container is bad input, not a key failure.
  auto bytes = read_file(boxed);
  bytes[0] = 'Z';
  const auto damaged = (work_dir() / "p3bad.qaes").string();
  write_file(damaged, bytes);
  CHECK(run_cli("decrypt --in " + damaged + " --out " + outp + " --config " +
                fixture("bb84_example.cfg")) == 2);
}

TEST_CASE("cli: usage errors exit with the bad-input code") {
  CHECK(run_cli("encrypt --in /nonexistent --out /tmp/x.qaes") == 2);  // missing key source
  CHECK(run_cli("keygen --config /nonexistent/none.cfg --out /tmp/x.qkey") == 2);
  CHECK(run_cli("encrypt") == 2);
  CHECK(run_cli("nonsense-subcommand") == 2);
  CHECK(run_cli("decrypt --in /nonexistent/none.qaes --out /tmp/x.bin --key /tmp/nope") == 2);
}

TEST_CASE("cli: sbox-analyze emits the pinned fixture statistics") {
  const auto csv = (work_dir() / "an.csv").string();
  CHECK(run_cli("sbox-analyze " + fixture("dqsbox1.txt") + " " + fixture("dqsbox2.txt") +
                " --csv " + csv) == 0);

  std::ifstream in(csv);
  REQUIRE(in.good());
  std::string line, mean_line, eq4_line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line == "row,pearson,corr,standardized_dot,independence,degenerate");
  while (std::getline(in, line)) {
    if (line.rfind("# mean_independence=", 0) == 0) mean_line = line;
    else if (line.rfind("# eq4_ratio=", 0) == 0) eq4_line = line;
    else ++rows;
  }
  CHECK(rows == 16);
  REQUIRE(mean_line.size() > 20);
  REQUIRE(eq4_line.size() > 12);
  CHECK(std::stod(mean_line.substr(20)) == doctest::Approx(94.5013).epsilon(1e-5));
  CHECK(std::stod(eq4_line.substr(12)) == doctest::Approx(0.0029167).epsilon(1e-3));

  CHECK(run_cli("sbox-analyze --seed-a 5 --seed-b 6") == 0);
  CHECK(run_cli("sbox-analyze " + fixture("dqsbox1.txt")) == 2);  // one grid is not enough
}
