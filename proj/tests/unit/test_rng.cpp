#include <doctest.h>

#include <cmath>
#include <vector>

#include "mflab/rng.hpp"

using mflab::CounterRng;

TEST_SUITE("rng") {
  TEST_CASE("zero key and counter reproduce the published Philox4x32-10 block") {
    CounterRng r(0, 0);
    CHECK(r.next_u64() == 0x6627e8d5e169c58dULL);
    CHECK(r.next_u64() == 0xbc57ac4c9b00dbd8ULL);
  }

  TEST_CASE("same seed and stream give the same sequence, other streams differ") {
    CounterRng a(42, 3), b(42, 3), c(42, 4), d(43, 3);
    int same_c = 0, same_d = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto x = a.next_u64();
      CHECK(x == b.next_u64());
      same_c += x == c.next_u64();
      same_d += x == d.next_u64();
    }
    CHECK(same_c == 0);
    CHECK(same_d == 0);
  }

  TEST_CASE("uniform and normal moments") {
    CounterRng r(7, 0);
    const int n = 200000;
    double su = 0, su2 = 0, sn = 0, sn2 = 0, sn4 = 0;
    for (int i = 0; i < n; ++i) {
      const double u = r.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      su += u;
      su2 += u * u;
      const double z = r.normal();
      sn += z;
      sn2 += z * z;
      sn4 += z * z * z * z;
    }
    CHECK(std::abs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(su2 / n - 1.0 / 3) < 5 * std::sqrt(4.0 / 45 / n));
    CHECK(std::abs(sn / n) < 5 / std::sqrt(double(n)));
    CHECK(std::abs(sn2 / n - 1.0) < 5 * std::sqrt(2.0 / n));
    CHECK(std::abs(sn4 / n - 3.0) < 5 * std::sqrt(96.0 / n));
  }

  TEST_CASE("below() stays in range and is close to uniform") {
    CounterRng r(9, 1);
    const int n = 7, draws = 70000;
    std::vector<int> count(n, 0);
    for (int i = 0; i < draws; ++i) {
      const auto v = r.below(n);
      REQUIRE(v < static_cast<std::uint64_t>(n));
      ++count[v];
    }
    double chi2 = 0;
    for (int c : count) chi2 += (c - draws / double(n)) * (c - draws / double(n)) / (draws / double(n));
    CHECK(chi2 < 22.5);  // 0.999 quantile of chi-square with 6 dof
    CHECK(r.below(1) == 0);
  }
}
