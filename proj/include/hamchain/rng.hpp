#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hamchain {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives an independent engine seed from (seed, tag, idx). Used so that
// e.g. demo #3 always sees the same stream no matter what ran before it.
inline uint64_t seed_stream(uint64_t seed, uint64_t tag, uint64_t idx = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ tag) ^ idx);
}

// mt19937_64 with hand-rolled uniform/normal so draws are bit-reproducible
// across standard libraries (std distributions are implementation defined).
class Rng {
 public:
  explicit Rng(uint64_t s) : eng_(s) {}

  // uniform in [0, 1)
  double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  // Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - u01();  // (0, 1]
    double u2 = u01();
    double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  // uniform in {0, ..., n-1}, rejection sampled so there is no modulo bias
  uint64_t uniform_int(uint64_t n) {
    const uint64_t lim = ~0ull - ~0ull % n;
    uint64_t r;
    do {
      r = eng_();
    } while (r >= lim);
    return r % n;
  }

  uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hamchain
