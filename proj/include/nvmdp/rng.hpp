#pragma once

#include <cstdint>
#include <random>

#include <boost/math/distributions/normal.hpp>

namespace nvmdp {

// Deterministic RNG wrapper. Everything the library samples goes through
// this class so that a run is reproducible bit for bit from its seed on any
// platform. That rules out two things from the standard library:
//
//  * distribution objects (std::normal_distribution etc.), whose algorithms
//    are implementation defined. Gaussian draws instead map one 53-bit
//    uniform through the inverse normal CDF (Boost.Math quantile), which is
//    a pure function.
//  * std::random_device seeding. Seeds always come from the caller.
//
// Stream derivation: independent streams (one per trial, separate streams
// for behavior and evaluation) are derived from (master seed, stream index)
// with a SplitMix64 mix, then fed through std::seed_seq, which the standard
// pins down exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      0x9e3779b9u, 0x7f4a7c15u};
    engine_.seed(seq);
  }

  static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    // SplitMix64 finalizer over master advanced by the stream index.
    std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static Rng for_stream(std::uint64_t master, std::uint64_t stream) {
    return Rng(derive_seed(master, stream));
  }

  // Uniform on [0, 1) with 53 random bits, the exact double grid.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on {0, ..., n-1}. Consumes exactly one engine draw.
  int uniform_int(int n) {
    int k = static_cast<int>(uniform01() * static_cast<double>(n));
    return k >= n ? n - 1 : k;  // guards the k == n edge from rounding
  }

  // N(mean, stddev^2) by inverse CDF. Consumes exactly one engine draw.
  double gaussian(double mean, double stddev) {
    double u = uniform01();
    // quantile() rejects 0 exactly; the smallest representable positive
    // value on the 53-bit grid is fine.
    if (u <= 0.0) u = 0x1.0p-53;
    static const boost::math::normal_distribution<double> unit(0.0, 1.0);
    return mean + stddev * boost::math::quantile(unit, u);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nvmdp
