#pragma once

#include <cstdint>
#include <span>

#include "qaes/util.hpp"

namespace qaes {

/// xoshiro256** 1.0 (Blackman & Vigna), state seeded with splitmix64.
/// Chosen over std::mt19937 because the std distributions are not
/// bit-reproducible across standard libraries; every draw here is fully
/// specified, so seeded simulations replay identically on any platform.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& word : state_) {
      z += 0x9e3779b97f4a7c15ull;
      std::uint64_t x = z;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
      word = x ^ (x >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  int next_bit() { return static_cast<int>(next() >> 63); }

  /// Uniform in [0,1) with 53 significant bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, n). Unbiased via rejection.
  std::uint32_t uniform(std::uint32_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return static_cast<std::uint32_t>(v % n);
  }

  bool bernoulli(double p) { return next_double() < p; }

  void fill_bytes(std::span<std::uint8_t> out) {
    std::size_t i = 0;
    while (i + 8 <= out.size()) {
      std::uint64_t v = next();
      for (int shift = 56; shift >= 0; shift -= 8)
        out[i++] = static_cast<std::uint8_t>(v >> shift);
    }
    if (i < out.size()) {
      std::uint64_t v = next();
      for (int shift = 56; i < out.size() && shift >= 0; shift -= 8)
        out[i++] = static_cast<std::uint8_t>(v >> shift);
    }
  }

  BitString random_bits(std::size_t nbits) {
    std::vector<std::uint8_t> bytes((nbits + 7) / 8);
    fill_bytes(bytes);
    if (nbits % 8 != 0) bytes.back() &= static_cast<std::uint8_t>(0xff00u >> (nbits % 8));
    BitString full = BitString::from_bytes(bytes);
    return nbits % 8 == 0 ? full : full.slice(0, nbits);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

}  // namespace qaes
