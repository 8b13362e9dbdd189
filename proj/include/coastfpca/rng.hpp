#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace coastfpca {

// Mixing function used to derive independent per-site streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Deterministic random stream with a fixed, portable algorithm:
/// std::mt19937_64 raw output (the engine sequence is pinned by the
/// standard), uniforms as (x >> 11) * 2^-53, normals by Box-Muller using
/// exactly two uniforms per draw (no cached spare). Standard-library
/// distributions are deliberately avoided because their output is
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Stream for site `index` under run seed `seed`; stable under any
  /// scheduling of per-site work.
  static Rng for_site(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(splitmix64(seed) ^ (index + 1) * 0x9E3779B97F4A7C15ULL));
  }

  std::uint64_t next() { return eng_(); }

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal, Box-Muller; consumes two uniforms.
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    // 1 - u1 lies in (0, 1], so the log is finite.
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Uniform integer in [0, n); modulo reduction (bias < 2^-53 for the n
  /// used here, and determinism matters more than the bias).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  /// Fisher-Yates shuffle driven by this stream.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace coastfpca
