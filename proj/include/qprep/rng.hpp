#pragma once

#include <cstdint>
#include <cmath>

namespace qprep {

// Counter-seeded xoshiro256** stream. Streams are derived from
// (seed, stream_id) so shot blocks can be sampled in any order, on any
// number of workers, with bit-identical results.
class Prng {
 public:
  Prng(uint64_t seed, uint64_t stream_id) {
    uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1));
    for (auto& word : s_) word = splitmix64(x);
    // Discard the first few outputs so nearby stream ids decorrelate.
    for (int i = 0; i < 8; ++i) next();
  }

  uint64_t next() {
    uint64_t result = rotl(s_[1] * 5, 7) * 9;
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double next_double() { return (next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), n must be small relative to 2^64.
  uint64_t next_below(uint64_t n) { return next() % n; }

  // Geometric skip: number of Bernoulli(p) failures before the next
  // success. Used to place rare errors across a block of shots.
  uint64_t next_geometric_skip(double p) {
    if (p <= 0.0) return UINT64_MAX;
    if (p >= 1.0) return 0;
    double u = next_double();
    double g = std::floor(std::log1p(-u) / std::log1p(-p));
    if (g >= 9e18) return UINT64_MAX;
    return static_cast<uint64_t>(g);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t s_[4];
};

}  // namespace qprep
