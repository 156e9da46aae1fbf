#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mflab/potential.hpp"
#include "mflab/rng.hpp"

using namespace mflab;

namespace {

// Dense 1D maximization of |f| on [0, R].
template <class F>
double grid_max(F f, double R, int n = 400001) {
  double m = 0.0;
  for (int i = 0; i <= n; ++i) m = std::max(m, std::abs(f(R * i / n)));
  return m;
}

}  // namespace

TEST_SUITE("potential") {
  TEST_CASE("Gaussian constants match grid maximization") {
    const Potential V = make_gaussian_potential(1.0, 1.0, 1);
    const double sup = grid_max([](double z) { return z * std::exp(-z * z / 2); }, 10.0);
    const double lip = grid_max([](double z) { return (z * z - 1) * std::exp(-z * z / 2); }, 10.0);
    CHECK(V.sup_grad() == doctest::Approx(sup).epsilon(1e-9));
    CHECK(V.lip_grad() == doctest::Approx(lip).epsilon(1e-9));
    CHECK(V.sup_grad() == doctest::Approx(0.60653).epsilon(1e-5));

    const Potential V2 = make_gaussian_potential(2.0, 1.0, 1);
    CHECK(V2.sup_grad() == doctest::Approx(2 * sup).epsilon(1e-9));
    CHECK(V2.lip_grad() == doctest::Approx(2 * lip).epsilon(1e-9));

    const Potential Z = make_gaussian_potential(0.0, 1.0, 1);
    CHECK(Z.sup_grad() == 0.0);
    CHECK(Z.lip_grad() == 0.0);
    CHECK_THROWS_AS(make_gaussian_potential(1.0, 0.0, 1), std::invalid_argument);
  }

  TEST_CASE("Gaussian formula in several dimensions") {
    const Potential V = make_gaussian_potential(1.5, 0.7, 3);
    const std::vector<double> z{0.3, -0.2, 0.5};
    const double r2 = 0.09 + 0.04 + 0.25;
    CHECK(V.eval(z) == doctest::Approx(1.5 * std::exp(-r2 / (2 * 0.49))).epsilon(1e-14));
  }

  TEST_CASE("cosine constants bound the dense-grid maxima with small slack") {
    const double A = 0.8, k = 2.0, R = 1.3;
    const Potential V = Potential::cosine(A, k, R, 1);
    auto f = [&](double r) { return A * std::cos(k * r) * std::exp(-r * r / (2 * R * R)); };
    auto f1 = [&](double r) {
      return A * std::exp(-r * r / (2 * R * R)) * (-k * std::sin(k * r) - r / (R * R) * std::cos(k * r));
    };
    const double h = 1e-4;
    auto f2 = [&](double r) { return (f1(r + h) - f1(r - h)) / (2 * h); };
    const double sup = grid_max(f1, 12 * R), lip = grid_max(f2, 12 * R, 200001), vmax = grid_max(f, 12 * R);
    CHECK(V.sup_grad() >= sup);
    CHECK(V.sup_grad() <= sup * (1 + 2e-3) + 1e-12);
    CHECK(V.lip_grad() >= lip * (1 - 1e-6));
    CHECK(V.lip_grad() <= lip * (1 + 2e-3) + 1e-6);
    CHECK(V.sup_abs() >= vmax * (1 - 1e-12));
  }

  TEST_CASE("evenness at random points") {
    CounterRng rng(1, 0);
    for (int d = 1; d <= 3; ++d) {
      const Potential g = make_gaussian_potential(1.0, 0.9, d);
      const Potential c = Potential::cosine(1.0, 1.7, 1.1, d);
      for (int i = 0; i < 10000; ++i) {
        std::vector<double> z(d), mz(d);
        for (int j = 0; j < d; ++j) {
          z[j] = rng.uniform(-4, 4);
          mz[j] = -z[j];
        }
        for (const Potential* V : {&g, &c}) {
          const double a = V->eval(z), b = V->eval(mz);
          REQUIRE(std::abs(a - b) <= 1e-12 * (1 + std::abs(a)));
        }
      }
    }
  }

  TEST_CASE("gradient matches central differences") {
    CounterRng rng(2, 0);
    for (const Potential& V : {make_gaussian_potential(1.0, 1.0, 2), Potential::cosine(1.2, 1.5, 1.0, 2)}) {
      for (int i = 0; i < 200; ++i) {
        std::vector<double> z{rng.uniform(-2, 2), rng.uniform(-2, 2)}, g(2);
        V.grad(z, g);
        for (int j = 0; j < 2; ++j) {
          auto zp = z, zm = z;
          zp[j] += 1e-4;
          zm[j] -= 1e-4;
          const double fd = (V.eval(zp) - V.eval(zm)) / 2e-4;
          REQUIRE(std::abs(fd - g[j]) <= 1e-6 * std::max(1.0, std::abs(g[j])));
        }
      }
    }
  }

  TEST_CASE("rescaling") {
    const Potential V = make_gaussian_potential(1.0, 1.0, 1);
    SUBCASE("unit scales multiply the potential by N") {
      const auto r = rescale({1.0, 1.0, 1.0, 1.0, 10}, V);
      CHECK(r.epsilon == 1.0);
      for (double z : {0.0, 0.4, 1.3}) CHECK(r.V_hat.eval1(z) == doctest::Approx(10 * V.eval1(z)).epsilon(1e-15));
    }
    SUBCASE("epsilon = hbar T / (m L^2)") {
      CHECK(rescale({0.1, 1.0, 1.0, 1.0, 1}, V).epsilon == doctest::Approx(0.1));
    }
    SUBCASE("hbar=1, m=2, L=2, T=1, N=4") {
      const auto r = rescale({1.0, 2.0, 2.0, 1.0, 4}, V);
      CHECK(r.epsilon == doctest::Approx(0.125).epsilon(1e-15));
      for (double z : {0.0, 0.3, -0.8}) CHECK(r.V_hat.eval1(z) == doctest::Approx(0.5 * std::exp(-2 * z * z)).epsilon(1e-14));
      auto d1 = [](double z) { return 0.5 * 4 * z * std::exp(-2 * z * z); };
      auto d2 = [](double z) { return 0.5 * 4 * std::abs(1 - 4 * z * z) * std::exp(-2 * z * z); };
      CHECK(r.V_hat.sup_grad() == doctest::Approx(grid_max(d1, 5.0)).epsilon(1e-9));
      CHECK(r.V_hat.lip_grad() == doctest::Approx(grid_max(d2, 5.0)).epsilon(1e-9));
    }
    SUBCASE("identity round trip is exact") {
      const auto r = rescale({1.0, 1.0, 1.0, 1.0, 1}, V);
      CounterRng rng(3, 0);
      for (int i = 0; i < 100; ++i) {
        const double z = rng.uniform(-5, 5);
        REQUIRE(r.V_hat.eval1(z) == V.eval1(z));
      }
    }
    SUBCASE("nonpositive inputs are rejected") {
      CHECK_THROWS_AS(rescale({0.0, 1.0, 1.0, 1.0, 1}, V), std::invalid_argument);
      CHECK_THROWS_AS(rescale({1.0, -1.0, 1.0, 1.0, 1}, V), std::invalid_argument);
      CHECK_THROWS_AS(rescale({1.0, 1.0, 1.0, 1.0, 0}, V), std::invalid_argument);
    }
  }

  TEST_CASE("verify_constants") {
    const Potential V = make_gaussian_potential(1.0, 1.0, 1);
    const auto rep = verify_constants(V, 100000, 8.0, 5);
    CHECK_FALSE(rep.violation());
    CHECK(rep.observed_sup_grad >= 0.9 * std::exp(-0.5));
    CHECK(rep.observed_sup_grad <= std::exp(-0.5));

    const auto zero = verify_constants(make_gaussian_potential(0.0, 1.0, 1), 1000, 8.0, 5);
    CHECK(zero.observed_sup_grad == 0.0);
    CHECK(zero.observed_lip_grad == 0.0);

    const auto bad = verify_constants(V.with_constants(0.5 * V.sup_grad(), V.lip_grad(), V.sup_abs()), 10000, 8.0, 5);
    CHECK(bad.sup_violation);

    const auto rep2 = verify_constants(Potential::cosine(1.0, 2.0, 1.0, 2), 20000, 6.0, 6);
    CHECK_FALSE(rep2.violation());
  }
}
