#pragma once

#include <cstdint>
#include <random>

namespace kmf {

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Deterministic sub-seed for stage `tag` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// Seeded random source whose output is identical on every platform.
///
/// Only the engine comes from <random> (mt19937_64 has a fully specified
/// output sequence); the distributions are implemented here because the
/// standard library ones are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Marsaglia polar method).
  double normal();
  /// Poisson variate: inversion for mean < 30, PTRS rejection otherwise.
  std::int64_t poisson(double mean);

 private:
  std::int64_t poisson_inversion(double mean);
  std::int64_t poisson_ptrs(double mean);

  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kmf
