#include "doctest.h"

#include "binpick/rng.hpp"

#include <cmath>

using namespace binpick;

TEST_SUITE("rng") {
  TEST_CASE("streams are pure functions of seed, name and position") {
    RngStream a(5, "grasp"), b(5, "grasp"), c(5, "scale"), d(6, "grasp");
    bool differs_name = false, differs_seed = false;
    for (int k = 0; k < 100; ++k) {
      const auto x = a.next_u64();
      CHECK(x == b.next_u64());
      differs_name |= x != c.next_u64();
      differs_seed |= x != d.next_u64();
    }
    CHECK(differs_name);
    CHECK(differs_seed);
    CHECK(a.counter() == 100);
  }

  TEST_CASE("distributions") {
    RngStream r(1, "dist");
    double sum = 0.0, sq = 0.0;
    int hits = 0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
      const double u = r.uniform();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      sum += u;
      hits += r.bernoulli(0.3) ? 1 : 0;
      const double z = r.normal(0.0, 1.0);
      sq += z * z;
      CHECK(r.index(7) < 7);
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(hits / static_cast<double>(n) == doctest::Approx(0.3).epsilon(0.02));
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK_FALSE(r.bernoulli(0.0));
    CHECK(r.bernoulli(1.0));
  }
}
