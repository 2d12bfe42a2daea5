#pragma once

#include <complex>
#include <cstdint>
#include <string_view>

namespace sbrrm {

/// Counter-based random stream with named substreams.
///
/// Every stochastic draw in the project is attributed to a labeled stream
/// derived from a root seed, so results are reproducible regardless of the
/// order in which independent pieces of work are executed. Substream
/// derivation does not consume state from the parent.
///
/// The generator is SplitMix64 over a 64-bit key/counter pair; normal
/// variates use Box-Muller on explicitly constructed doubles so output is
/// identical across standard libraries.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  /// Child stream identified by a label (and optionally an index).
  RandomStream stream(std::string_view label) const;
  RandomStream stream(std::string_view label, std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);
  /// Standard normal.
  double normal();
  /// Circularly symmetric complex normal with unit variance, CN(0, 1).
  std::complex<double> complex_normal();

  std::uint64_t key() const { return key_; }

 private:
  RandomStream(std::uint64_t key, int);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace sbrrm
