#include <doctest.h>

#include <cmath>

#include "mflab/quantum.hpp"
#include "mflab/rng.hpp"

using namespace mflab;
using namespace mflab::quantum;

namespace {

GridSpec line(int n, double L, double eps) {
  GridSpec g;
  g.points_per_axis = n;
  g.box_half_width = L;
  g.epsilon = eps;
  return g;
}

GridSpec pair_grid(const GridSpec& s) {
  GridSpec g = s;
  g.doubled = true;
  return g;
}

SymbolMeasure random_symbol(CounterRng& rng, int atoms) {
  SymbolMeasure mu;
  mu.points.resize(atoms, 2);
  mu.weights.resize(atoms);
  for (int m = 0; m < atoms; ++m) {
    mu.points(m, 0) = rng.uniform(-1.0, 1.0);
    mu.points(m, 1) = rng.uniform(-1.0, 1.0);
    mu.weights(m) = 0.2 + rng.uniform();
  }
  mu.weights /= mu.weights.sum();
  return mu;
}

SymbolMeasure dirac(double q, double p) {
  Eigen::VectorXd z(2);
  z << q, p;
  return DiscreteMeasure::dirac(z);
}

}  // namespace

TEST_SUITE("couplings") {
  const GridSpec g1 = line(64, 6.0, 0.5);
  const double eps = 0.5;

  TEST_CASE("quadratic cost of coherent product couplings") {
    const GridSpec g2 = pair_grid(g1);
    SUBCASE("diagonal atom") {
      const WaveFunction Phi = coherent_product(g2, {0.4, 0.4}, {-0.3, -0.3});
      CHECK(qp_cost_trace(Phi) == doctest::Approx(2 * eps).epsilon(1e-4));
      CHECK(qp_cost_trace(DensityMatrix::pure(Phi)) == doctest::Approx(qp_cost_trace(Phi)).epsilon(1e-12));
    }
    SUBCASE("off-diagonal atom") {
      const WaveFunction Phi = coherent_product(g2, {-0.5, 0.7}, {0.2, -0.4});
      const double dz2 = 1.2 * 1.2 + 0.6 * 0.6;
      CHECK(qp_cost_trace(Phi) == doctest::Approx(dz2 + 2 * eps).epsilon(1e-4));
    }
    SUBCASE("any mixed coupling stays above 2 eps") {
      CounterRng rng(2, 0);
      for (int trial = 0; trial < 10; ++trial) {
        const SymbolMeasure a = random_symbol(rng, 3), b = random_symbol(rng, 3);
        TransportPlan plan;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) plan.entries.push_back({i, j, a.weights(i) * b.weights(j)});
        CHECK(qp_cost_trace(toeplitz_coupling(g1, a, b, plan)) >= 2 * eps - 1e-6);
      }
    }
  }

  TEST_CASE("upper bracket") {
    CHECK(mk_eps_upper(dirac(0.1, 0.2), dirac(0.1, 0.2), eps) == doctest::Approx(2 * eps).epsilon(1e-15));
    CHECK(mk_eps_upper(dirac(0.0, 0.0), dirac(0.3, 0.4), eps) == doctest::Approx(0.25 + 2 * eps).epsilon(1e-14));
    CounterRng rng(3, 0);
    for (int trial = 0; trial < 5; ++trial) {
      const SymbolMeasure a = random_symbol(rng, 4), b = random_symbol(rng, 4);
      const auto opt = transport::wasserstein_exact(a, b, 2.0);
      const double lifted = qp_cost_trace(toeplitz_coupling(g1, a, b, opt.plan));
      CHECK(lifted == doctest::Approx(mk_eps_upper(a, b, eps)).epsilon(1e-4));
    }
  }

  TEST_CASE("lower bracket") {
    SUBCASE("identical states") {
      const DensityMatrix r = toeplitz_operator(g1, dirac(0.2, -0.1));
      const LowerBracket lb = mk_eps_lower(r, r);
      CHECK(lb.husimi_w2_sq == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(lb.value >= -2 * eps - 1e-12);
    }
    SUBCASE("two coherent states") {
      const DensityMatrix a = toeplitz_operator(g1, dirac(-0.5, 0.0));
      const DensityMatrix b = toeplitz_operator(g1, dirac(0.5, 0.5));
      const LowerBracket lb = mk_eps_lower(a, b, {32, 6.0});
      CHECK(lb.value == doctest::Approx(1.25 - 2 * eps).epsilon(1e-2));
    }
    SUBCASE("sandwich") {
      CounterRng rng(4, 0);
      for (int trial = 0; trial < 20; ++trial) {
        const SymbolMeasure a = random_symbol(rng, 2), b = random_symbol(rng, 2);
        const DensityMatrix ra = toeplitz_operator(g1, a), rb = toeplitz_operator(g1, b);
        const auto opt = transport::wasserstein_exact(a, b, 2.0);
        const double cost = qp_cost_trace(toeplitz_coupling(g1, a, b, opt.plan));
        const LowerBracket lb = mk_eps_lower(ra, rb, {16, 6.0});
        CHECK(lb.value <= cost);
        CHECK(cost >= lb.husimi_w2_sq - 2 * eps - 1e-3);
      }
    }
  }

  TEST_CASE("Dobrushin functional on the doubled grid") {
    GridSpec g = line(32, 5.0, 0.5);
    g.n_particles = 2;
    g.doubled = true;
    SUBCASE("diagonal coherent product") {
      const WaveFunction Phi = coherent_product(g, {0.2, -0.3, 0.2, -0.3}, {0.1, 0.0, 0.1, 0.0});
      CHECK(dobrushin_quantum_functional(Phi, eps, 2) == doctest::Approx(2 * eps).epsilon(1e-3));
    }
    SUBCASE("free evolution of matching factors") {
      // The factors spread independently: Var(x - y) = eps (1 + t^2), while the momentum part stays eps.
      WaveFunction Phi = coherent_product(g, {0.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0});
      WaveFunction ref = coherent_state(g.single(), 0.0, 0.0);
      coupled_quantum_advance(Phi, ref, Potential::gaussian(0.0, 1.0, 1), 0.01, 50);
      CHECK(dobrushin_quantum_functional(Phi, eps, 2) == doctest::Approx(eps * (2.0 + 0.25)).epsilon(1e-6));
      CHECK(dobrushin_quantum_functional(Phi, eps, 2) >= 2 * eps - 1e-6);
    }
  }

  TEST_CASE("symmetrized initial couplings") {
    auto block = [](std::initializer_list<double> v) {
      Eigen::MatrixXd m(1, static_cast<Eigen::Index>(v.size()));
      Eigen::Index i = 0;
      for (double x : v) m(0, i++) = x;
      return DiscreteMeasure::uniform(m);
    };
    TransportPlan one;
    one.entries = {{0, 0, 1.0}};
    SUBCASE("N = 1 is the identity") {
      const SymbolMeasure s = symmetrize_initial_coupling(one, block({0.1, 0.2}), block({0.3, 0.4}), 1);
      REQUIRE(s.points.rows() == 1);
      CHECK(s.points.row(0) == Eigen::RowVector4d(0.1, 0.2, 0.3, 0.4));
      CHECK(s.weights(0) == 1.0);
    }
    SUBCASE("symmetric product symbol is unchanged") {
      const SymbolMeasure s = symmetrize_initial_coupling(one, block({0.1, 0.2, 0.1, 0.2}), block({0.5, 0.0, 0.5, 0.0}), 2);
      REQUIRE(s.points.rows() == 1);
      CHECK(s.weights(0) == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("asymmetric pair: two-term average with the same cost") {
      const SymbolMeasure src = block({0.1, 0.2, -0.4, 0.3}), dst = block({0.0, 0.5, 0.6, -0.1});
      const SymbolMeasure s = symmetrize_initial_coupling(one, src, dst, 2);
      REQUIRE(s.points.rows() == 2);
      CHECK(s.weights(0) == doctest::Approx(0.5));
      CHECK(s.weights(1) == doctest::Approx(0.5));
      SymbolMeasure raw;
      raw.points.resize(1, 8);
      raw.points << src.points, dst.points;
      raw.weights = Eigen::VectorXd::Ones(1);
      CHECK(symbol_coupling_cost(s, 2) == doctest::Approx(symbol_coupling_cost(raw, 2)).epsilon(1e-14));
    }
    SUBCASE("too many particles") {
      const SymbolMeasure big = block({0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
      CHECK_THROWS_AS(symmetrize_initial_coupling(one, big, big, 7), std::invalid_argument);
    }
  }
}
