#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace spectral {

// Deterministic RNG with named substreams. All randomness in the library
// flows from one 64-bit seed; substreams are derived by hashing a textual
// name (e.g. "trial/17/x0") into the seed, so adding new consumers never
// perturbs existing streams. Hand-rolled (xoshiro256++ over splitmix64)
// because std:: distributions are not bit-stable across standard libraries
// and reruns must be byte-identical.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// A stream identifier: the root seed plus any chain of substream names.
struct StreamSeed {
  std::uint64_t value = 0;

  StreamSeed sub(std::string_view name) const {
    std::uint64_t s = value ^ fnv1a64(name);
    splitmix64(s);
    return StreamSeed{splitmix64(s)};
  }
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }
  explicit Rng(StreamSeed s) : Rng(s.value) {}

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

  // Uniform in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller; the spare value is cached, so draw order is part of the stream.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01(), u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::vector<double> gaussian_vector(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = gaussian();
    return v;
  }

  // Uniform on the unit sphere S^{n-1}.
  std::vector<double> sphere(std::size_t n) {
    std::vector<double> v = gaussian_vector(n);
    double s = 0.0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    if (s == 0.0) {
      v.assign(n, 0.0);
      v[0] = 1.0;
      return v;
    }
    for (auto& x : v) x /= s;
    return v;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4] = {};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace spectral
