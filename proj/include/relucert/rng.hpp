#ifndef RELUCERT_RNG_HPP_
#define RELUCERT_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace relucert {

// Finalizer from splitmix64; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Seedable, splittable random stream (xoshiro256++ core, splitmix64 seeding).
//
// A stream is identified by (seed, stream_id). Substreams derived from the
// same seed with distinct ids are statistically independent, which lets
// callers assign one stream per Monte Carlo sample: results are then
// bit-identical no matter how samples are partitioned across workers.
// All draws are computed from integer arithmetic and libm, so a given
// (seed, stream_id, call sequence) reproduces exactly.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : RngStream(seed, 0) {}

  RngStream(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = mix64(seed + 0x9E3779B97F4A7C15ULL) ^
                      mix64(stream_id + 0x3C6EF372FE94F82AULL);
    for (auto& word : state_) {
      s += 0x9E3779B97F4A7C15ULL;
      word = mix64(s);
    }
  }

  std::uint64_t next_u64() {
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

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via the Marsaglia polar method; pairs are cached.
  double next_normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double a, b, q;
    do {
      a = 2.0 * next_unit() - 1.0;
      b = 2.0 * next_unit() - 1.0;
      q = a * a + b * b;
    } while (q >= 1.0 || q == 0.0);
    const double f = std::sqrt(-2.0 * std::log(q) / q);
    cached_ = b * f;
    has_cached_ = true;
    return a * f;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace relucert

#endif  // RELUCERT_RNG_HPP_
