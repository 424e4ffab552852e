#include "qaes/dqsbox.hpp"

#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "qaes/util.hpp"

namespace qaes {

namespace {

// AES-256 counter-mode byte source. Counter blocks start at zero and
// increment big-endian.
class Keystream {
 public:
  explicit Keystream(std::span<const std::uint8_t> key32)
      : rks_(expand_key(key32, params_for_key_len(256))) {}

  std::uint8_t next() {
    if (pos_ == 16) {
      refill();
      pos_ = 0;
    }
    return buf_[pos_++];
  }

 private:
  void refill() {
    buf_ = encrypt_block(counter_, rks_, standard_sbox());
    for (int i = 15; i >= 0; --i)
      if (++counter_[static_cast<std::size_t>(i)] != 0) break;
  }

  RoundKeySet rks_;
  Block counter_{};
  Block buf_{};
  std::size_t pos_ = 16;
};

std::array<double, 16> row_as_doubles(const std::array<std::uint8_t, 16>& row) {
  std::array<double, 16> out{};
  for (std::size_t i = 0; i < 16; ++i) out[i] = static_cast<double>(row[i]);
  return out;
}

bool row_constant(const std::array<std::uint8_t, 16>& row) {
  for (std::size_t i = 1; i < 16; ++i)
    if (row[i] != row[0]) return false;
  return true;
}

}  // namespace

DqsBox generate_box(std::span<const std::uint8_t> key_material) {
  if (key_material.size() != 32)
    throw std::invalid_argument("box generation takes exactly 32 bytes of key material");

  Keystream ks(key_material);
  DqsBox box;
  for (int i = 0; i < 256; ++i) box.forward[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);

  // Fisher-Yates with rejection sampling keeps each swap target uniform.
  for (int i = 255; i >= 1; --i) {
    const int k = i + 1;
    const int lim = 256 - 256 % k;
    int r;
    do {
      r = ks.next();
    } while (r >= lim);
    const int j = r % k;
    std::swap(box.forward[static_cast<std::size_t>(i)], box.forward[static_cast<std::size_t>(j)]);
  }

  for (int i = 0; i < 256; ++i)
    box.inverse[box.forward[static_cast<std::size_t>(i)]] = static_cast<std::uint8_t>(i);
  box.seed_digest = fnv1a64(key_material);
  return box;
}

Grid16 grid16_from_box(const SboxTable& box) {
  Grid16 g{};
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t c = 0; c < 16; ++c) g[r][c] = box[16 * r + c];
  return g;
}

Grid16 parse_grid16(const std::string& text) {
  std::vector<std::uint8_t> values;
  values.reserve(256);
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      std::string body = tok;
      if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X'))
        body = body.substr(2);
      if (body.empty() || body.size() > 2)
        throw FormatError("grid line " + std::to_string(lineno) + ": bad byte '" + tok + "'");
      unsigned v = 0;
      for (char ch : body) {
        if (!std::isxdigit(static_cast<unsigned char>(ch)))
          throw FormatError("grid line " + std::to_string(lineno) + ": bad byte '" + tok + "'");
        v = v * 16 + static_cast<unsigned>(std::isdigit(static_cast<unsigned char>(ch))
                                               ? ch - '0'
                                               : std::tolower(static_cast<unsigned char>(ch)) - 'a' + 10);
      }
      values.push_back(static_cast<std::uint8_t>(v));
    }
  }
  if (values.size() != 256)
    throw FormatError("grid holds " + std::to_string(values.size()) + " bytes, expected 256");

  Grid16 g{};
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t c = 0; c < 16; ++c) g[r][c] = values[16 * r + c];
  return g;
}

Grid16 load_grid16(const std::string& path) {
  const auto raw = read_file(path);
  return parse_grid16(std::string(raw.begin(), raw.end()));
}

std::array<double, 16> standardize_row(const std::array<std::uint8_t, 16>& row) {
  std::uint8_t lo = row[0], hi = row[0];
  for (auto v : row) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo == hi) throw DegenerateRowError("constant row has zero spread");

  const double m = (static_cast<double>(hi) - static_cast<double>(lo)) / 2.0;
  const double s = (static_cast<double>(hi) - static_cast<double>(lo)) / 4.0;
  std::array<double, 16> y{};
  for (std::size_t i = 0; i < 16; ++i) y[i] = (static_cast<double>(row[i]) - m) / s;
  return y;
}

CorrelationProfile correlation_profile(const Grid16& a, const Grid16& b) {
  CorrelationProfile p;
  double sum_independence = 0.0;

  for (std::size_t r = 0; r < 16; ++r) {
    RowCorrelation& rc = p.rows[r];
    if (row_constant(a[r]) || row_constant(b[r])) {
      rc.degenerate = true;
      ++p.degenerate_count;
      continue;
    }

    const auto xa = row_as_doubles(a[r]);
    const auto xb = row_as_doubles(b[r]);
    const double ma = std::accumulate(xa.begin(), xa.end(), 0.0) / 16.0;
    const double mb = std::accumulate(xb.begin(), xb.end(), 0.0) / 16.0;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
      const double da = xa[i] - ma;
      const double db = xb[i] - mb;
      sab += da * db;
      saa += da * da;
      sbb += db * db;
    }
    rc.pearson = sab / std::sqrt(saa * sbb);
    rc.corr = rc.pearson * rc.pearson;
    rc.independence = (1.0 - rc.corr) * 100.0;

    const auto ya = standardize_row(a[r]);
    const auto yb = standardize_row(b[r]);
    double dot = 0.0;
    for (std::size_t i = 0; i < 16; ++i) dot += ya[i] * yb[i];
    rc.standardized_dot = dot / 16.0;

    sum_independence += rc.independence;
  }

  const std::size_t live = 16 - p.degenerate_count;
  p.mean_independence = live ? sum_independence / static_cast<double>(live) : 0.0;
  return p;
}

double eq4_ratio(const CorrelationProfile& profile, const Grid16& a) {
  double lo = 0.0, hi = 0.0;
  bool seen = false;
  for (const auto& rc : profile.rows) {
    if (rc.degenerate) continue;
    if (!seen) {
      lo = hi = rc.corr;
      seen = true;
    } else {
      lo = std::min(lo, rc.corr);
      hi = std::max(hi, rc.corr);
    }
  }
  if (!seen) throw Error("spread ratio undefined: every row is degenerate");

  std::uint8_t peak = 0;
  for (const auto& row : a)
    for (auto v : row) peak = std::max(peak, v);
  if (peak == 0) throw Error("spread ratio undefined: grid is all zero");

  return ((hi - lo) / 4.0) / static_cast<double>(peak);
}

BoxDiagnostics box_diagnostics(const SboxTable& box) {
  BoxDiagnostics d;
  for (int x = 0; x < 256; ++x)
    if (box[static_cast<std::size_t>(x)] == x) ++d.fixed_points;

  for (int dx = 1; dx < 256; ++dx) {
    std::array<int, 256> count{};
    for (int x = 0; x < 256; ++x) {
      const int dy = box[static_cast<std::size_t>(x)] ^ box[static_cast<std::size_t>(x ^ dx)];
      ++count[static_cast<std::size_t>(dy)];
    }
    for (int c : count) d.differential_uniformity = std::max(d.differential_uniformity, c);
  }
  return d;
}

}  // namespace qaes
