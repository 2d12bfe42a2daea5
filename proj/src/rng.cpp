#include "sbrrm/rng.hpp"

#include <cmath>

namespace sbrrm {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) : key_(splitmix64(seed)) {}

RandomStream::RandomStream(std::uint64_t key, int) : key_(key) {}

RandomStream RandomStream::stream(std::string_view label) const {
  return RandomStream(splitmix64(key_ ^ fnv1a(label)), 0);
}

RandomStream RandomStream::stream(std::string_view label, std::uint64_t index) const {
  return RandomStream(splitmix64(splitmix64(key_ ^ fnv1a(label)) + index), 0);
}

std::uint64_t RandomStream::next_u64() { return splitmix64(key_ + ++counter_); }

double RandomStream::uniform() {
  // 53 high bits -> double in [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::uniform_int(std::uint64_t n) {
  // Rejection-free modulo is fine here; n is tiny compared to 2^64 in all uses.
  return next_u64() % n;
}

double RandomStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform();
  double u2 = uniform();
  while (u1 <= 0x1.0p-60) u1 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

std::complex<double> RandomStream::complex_normal() {
  const double re = normal();
  const double im = normal();
  return {re * M_SQRT1_2, im * M_SQRT1_2};
}

}  // namespace sbrrm
