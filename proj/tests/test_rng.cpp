#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sbrrm/rng.hpp"

using sbrrm::RandomStream;

TEST_CASE("identical seeds give identical sequences") {
  RandomStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("substreams are independent of sibling draw order") {
  RandomStream root(7);
  RandomStream child_a = root.stream("alpha");
  // Drawing from one sibling first must not change another sibling.
  (void)child_a.next_u64();
  RandomStream child_b1 = root.stream("beta");
  const std::uint64_t first = child_b1.next_u64();
  RandomStream child_b2 = RandomStream(7).stream("beta");
  CHECK(child_b2.next_u64() == first);
  CHECK(root.stream("alpha", 0).key() != root.stream("alpha", 1).key());
  CHECK(root.stream("alpha").key() != root.stream("beta").key());
}

TEST_CASE("uniform stays in [0,1) and is roughly uniform") {
  RandomStream s(3);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = s.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("normal moments") {
  RandomStream s(11);
  double mean = 0.0, var = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const double x = s.normal();
    mean += x;
    var += x * x;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(mean == doctest::Approx(0.0).epsilon(0.05));
  CHECK(std::abs(mean) < 0.05);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("complex normal has unit variance") {
  RandomStream s(13);
  double power = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) power += std::norm(s.complex_normal());
  CHECK(power / n == doctest::Approx(1.0).epsilon(0.05));
}
