#pragma once

// Counter-based pseudo-random streams.
//
// Every draw is a pure function of (key, counter):
//
//   key      = mix(seed XOR mix(stream_id + 0x9E3779B97F4A7C15))
//   word(i)  = mix(key + (i + 1) * 0x9E3779B97F4A7C15)
//   uniform  = (word >> 11) * 2^-53            in [0, 1)
//
// where mix is the SplitMix64 finalizer
//
//   z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//   z ^= z >> 27; z *= 0x94D049BB133111EB;
//   z ^= z >> 31;
//
// All arithmetic is modulo 2^64, so the sequence is identical on every
// platform and in every language that implements the same three lines.
// split(c) is the stream CounterRng(key, c).

#include <cmath>
#include <cstdint>
#include <vector>

namespace al3 {

class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : key_(mix(seed ^ mix(stream_id + kGolden))) {}

  /// Child stream; independent of the parent's counter position.
  [[nodiscard]] constexpr CounterRng split(std::uint64_t child_id) const noexcept {
    return CounterRng(key_, child_id);
  }

  [[nodiscard]] constexpr std::uint64_t word_at(std::uint64_t i) const noexcept {
    return mix(key_ + (i + 1) * kGolden);
  }

  constexpr std::uint64_t next_u64() noexcept { return word_at(counter_++); }

  /// Uniform in [0, 1).
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// exp(U(log lo, log hi)); requires 0 < lo <= hi.
  double log_uniform(double lo, double hi) noexcept {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  /// Uniform integer in [0, n) by rejection-free multiply-shift (n > 0).
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  std::vector<double> uniform_vector(std::size_t len, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(len);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }

  [[nodiscard]] constexpr std::uint64_t counter() const noexcept { return counter_; }
  [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace al3
