#ifndef PTAIL_RNG_HPP
#define PTAIL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace ptail {

// splitmix64 finalizer; used to decorrelate derived stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed of the RNG stream for a given substream index.  Streams derived
// from the same root with distinct indices are independent for all
// practical purposes, and the mapping is pure: parallel schedulers that
// assign stream i to replication i reproduce sequential runs bit for bit.
inline std::uint64_t stream_seed(std::uint64_t root, std::uint64_t index) {
  return mix64(root + 0x9e3779b97f4a7c15ULL * (index + 1));
}

// mt19937_64 wrapper with hand-rolled variate transforms.  The standard
// engine output sequence is pinned by the C++ standard, while
// std::*_distribution algorithms are implementation-defined; transforming
// raw engine words ourselves keeps every sample bit-reproducible across
// compilers and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + uniform() * (b - a); }

  bool bernoulli(double p) { return uniform() < p; }

  // Pareto(1) via inverse transform Z = 1/U with U uniform on (0, 1].
  double pareto1() { return 1.0 / (1.0 - uniform()); }

  // Standard normal via Box-Muller (cosine branch only).
  double normal() {
    double u1 = uniform();
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Index in [0, n) by rejection-free scaling; n is expected small.
  std::size_t index(std::size_t n) {
    const std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ptail

#endif  // PTAIL_RNG_HPP
