#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "qaes/aes.hpp"

namespace qaes {

/// A dynamic substitution box derived from 256 bits of quantum key
/// material. Forward and inverse tables are exact permutation inverses
/// of each other; seed_digest identifies the material that produced
/// them without retaining it.
struct DqsBox {
  SboxTable forward{};
  SboxTable inverse{};
  std::uint64_t seed_digest = 0;
};

/// Deterministically expands exactly 32 bytes of key material into a
/// box. The material keys an AES-256 counter-mode keystream whose
/// bytes drive an unbiased Fisher-Yates shuffle of the identity
/// permutation, so every permutation of 0..255 is reachable and equal
/// material always yields an identical box.
DqsBox generate_box(std::span<const std::uint8_t> key_material);

using Grid16 = std::array<std::array<std::uint8_t, 16>, 16>;

Grid16 grid16_from_box(const SboxTable& box);

/// Parses a 16x16 grid of hex bytes (optional 0x prefixes, '#' line
/// comments). Throws FormatError on malformed input.
Grid16 parse_grid16(const std::string& text);
Grid16 load_grid16(const std::string& path);

/// Range standardization of one 16-entry row: y_i = (x_i - m) / s with
/// m = (max - min) / 2 and s = (max - min) / 4. Throws
/// DegenerateRowError when the row is constant.
std::array<double, 16> standardize_row(const std::array<std::uint8_t, 16>& row);

struct RowCorrelation {
  double pearson = 0.0;           // signed correlation coefficient
  double corr = 0.0;              // pearson squared, the reported CORR value
  double standardized_dot = 0.0;  // (1/16) sum of products of standardized rows
  double independence = 0.0;      // (1 - corr) * 100
  bool degenerate = false;        // constant row on either side
};

struct CorrelationProfile {
  std::array<RowCorrelation, 16> rows{};
  double mean_independence = 0.0;  // over non-degenerate rows only
  std::size_t degenerate_count = 0;
};

/// Row-by-row correlation of two grids. Degenerate rows are flagged,
/// carry zeroed statistics, and are excluded from the mean.
CorrelationProfile correlation_profile(const Grid16& a, const Grid16& b);

/// Spread ratio of the 16 CORR values against the dominant entry of
/// grid a: ((max - min) / 4 over non-degenerate CORR values) divided by
/// the largest byte of a.
double eq4_ratio(const CorrelationProfile& profile, const Grid16& a);

struct BoxDiagnostics {
  int fixed_points = 0;
  int differential_uniformity = 0;
};

BoxDiagnostics box_diagnostics(const SboxTable& box);

}  // namespace qaes
