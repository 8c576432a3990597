#pragma once

// Random streams and counter-based pseudorandom functions.
//
// Streams are std::mt19937_64 engines; the conversions to uniform and
// exponential variates are done here rather than through <random>
// distributions so that outputs are identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace sisnet {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept {
  return mix64(h ^ mix64(v));
}

/// FNV-1a, used to fold scenario names into seeds.
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Maps a 64-bit word to a double in [0, 1) with 53 bits of precision.
constexpr double to_unit(std::uint64_t x) noexcept {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Counter-based uniform in [0,1) keyed by (key, a, b, c). Stateless, so
/// any consumer can reconstruct the value without storing it.
constexpr double counter_uniform(std::uint64_t key, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) noexcept {
  return to_unit(hash_combine(hash_combine(hash_combine(mix64(key), a), b), c));
}

/// Per-pair edge uniform V(i,j); symmetric in (i,j).
constexpr double pair_uniform(std::uint64_t key, std::uint64_t i, std::uint64_t j) noexcept {
  return i < j ? counter_uniform(key, i, j) : counter_uniform(key, j, i);
}

class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t seed) : engine_(mix64(seed)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return to_unit(engine_()); }

  /// Uniform in (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  /// Exponential with the given rate; rate must be positive.
  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  /// Uniform integer in [0, bound), bound > 0. Lemire's nearly-divisionless method.
  std::uint64_t below(std::uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Number of failures before the first success, success probability p in (0,1].
  std::uint64_t geometric(double p) {
    if (p >= 1.0) return 0;
    const double g = std::floor(std::log(uniform_pos()) / std::log1p(-p));
    return g >= 1.8e19 ? UINT64_MAX : static_cast<std::uint64_t>(g);
  }

 private:
  std::mt19937_64 engine_;
};

/// Seed for an independent stream identified by a tuple of labels.
template <typename... Labels>
constexpr std::uint64_t derive_seed(std::uint64_t master, Labels... labels) noexcept {
  std::uint64_t h = mix64(master);
  ((h = hash_combine(h, static_cast<std::uint64_t>(labels))), ...);
  return h;
}

}  // namespace sisnet
