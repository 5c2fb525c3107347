#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace gridlearn {

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic uniform RNG. std::mt19937_64 output is fully specified by the
// standard; uniform doubles use a fixed 53-bit ladder because
// std::uniform_real_distribution is implementation-defined and would break
// byte-identical datasets across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Named sub-stream: children of (seed, tag, index) are independent.
  static Rng stream(std::uint64_t seed, std::string_view tag,
                    std::uint64_t index = 0) {
    return Rng(mix64(mix64(seed ^ fnv1a64(tag)) + index));
  }

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1) with 53 bits of mantissa.
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Uniform integer in [0, n); n > 0. Fixed-point multiply, no rejection.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(eng_()) * n) >> 64);
  }

  template <class T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(xs[i - 1], xs[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace gridlearn
