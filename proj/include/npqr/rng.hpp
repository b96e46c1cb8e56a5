#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace npqr {

// splitmix64, used only to spread (seed, stream) pairs into engine seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic substream generator. Each (seed, stream) pair yields an
// independent engine, so draw b can run on any thread and still produce
// the same numbers. The variate transforms are hand-rolled rather than
// std::*_distribution so the byte stream is pinned to this code, not to a
// particular standard library.
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, std::uint64_t stream)
      : eng_(splitmix64(splitmix64(seed) ^ (stream + 0x51d1b4de90f7f1aaull))) {}

  // Uniform on (0,1): 53-bit mantissa, never exactly 0 or 1.
  double uniform() {
    const std::uint64_t r = eng_() >> 11;
    return (static_cast<double>(r) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform()); }

  // Box-Muller, pair cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = uniform();
    const double v = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u));
    const double ang = 6.283185307179586476925286766559 * v;
    spare_ = rad * std::sin(ang);
    have_spare_ = true;
    return rad * std::cos(ang);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace npqr
