#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace resfield {

// Roles separate the random streams consumed by one (rep, copy) slot so that
// e.g. the auxiliary field and the spectral draws never share state.
enum class StreamRole : std::uint64_t {
  AuxField = 1,
  Spectral = 2,
  Poisson = 3,
  Germ = 4,
  Weights = 5,
  Locations = 6,
  PairSubsample = 7,
  Test = 99,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// xoshiro256++ engine. Satisfies UniformRandomBitGenerator, so it plugs into
/// the <random> distributions. State is four words, which keeps per-copy
/// stream construction cheap enough to create millions of substreams.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed = 0) {
    std::uint64_t s = seed;
    for (auto& w : state_) {
      s = splitmix64(s);
      w = s;
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1); never returns 0, so log() is safe.
  double uniform_open() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_open(); }

  /// +1 or -1 with equal probability.
  double rademacher() { return ((*this)() >> 63) ? 1.0 : -1.0; }

  /// Standard normal via Box-Muller, caching the second variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_open()));
    const double theta = 2.0 * std::numbers::pi * uniform_open();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

using RandomStream = Xoshiro256;

/// Deterministic substream for (seed, rep, copy, role). Distinct tuples hash to
/// unrelated engine states; the result does not depend on the order in which
/// streams are created, so threaded runs reproduce serial runs bit for bit.
inline RandomStream rng_substream(std::uint64_t seed, std::uint64_t rep, std::uint64_t copy,
                                  StreamRole role) {
  std::uint64_t h = splitmix64(seed ^ 0x5d1a3c7f0e2b4968ULL);
  h = splitmix64(h ^ (rep * 0xd6e8feb86659fd93ULL));
  h = splitmix64(h ^ (copy * 0xa0761d6478bd642fULL));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(role) * 0xe7037ed1a0b428dbULL));
  return RandomStream(h);
}

}  // namespace resfield
