#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

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

// Midpoint quadrature of the continuum coherent state on a fine independent mesh.
cplx overlap_oracle(double eps, double q1, double p1, double q2, double p2) {
  const int n = 200000;
  const double a = -20.0, h = 40.0 / n;
  cplx s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = a + h * (i + 0.5);
    const cplx f1 = std::exp(-(x - q1) * (x - q1) / (2 * eps)) * std::polar(1.0, p1 * x / eps);
    const cplx f2 = std::exp(-(x - q2) * (x - q2) / (2 * eps)) * std::polar(1.0, p2 * x / eps);
    s += std::conj(f1) * f2;
  }
  return s * h / std::sqrt(std::numbers::pi * eps);
}

}  // namespace

TEST_SUITE("quantum_states") {
  TEST_CASE("coherent state moments") {
    const GridSpec g = line(256, 8.0, 0.25);
    const WaveFunction psi = coherent_state(g, 0.0, 0.0);
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-14));
    const PhaseMoments m = moments(DensityMatrix::pure(psi));
    CHECK(std::abs(m.mean_x) <= 1e-12);
    CHECK(m.var_x == doctest::Approx(0.125).epsilon(1e-10));
    CHECK(m.var_p == doctest::Approx(0.125).epsilon(1e-10));

    const PhaseMoments m2 = moments(DensityMatrix::pure(coherent_state(g, 0.7, -1.3)));
    CHECK(m2.mean_x == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(std::abs(m2.mean_p + 1.3) <= 1e-8);
  }

  TEST_CASE("coherent overlaps match quadrature") {
    const GridSpec g = line(256, 8.0, 0.25);
    const double z[3][2] = {{0.0, 0.0}, {0.5, 0.3}, {-1.0, 0.8}};
    for (auto& a : z)
      for (auto& b : z) {
        const cplx grid = coherent_vector(g, a[0], a[1]).dot(coherent_vector(g, b[0], b[1]));
        const double dz2 = (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
        CHECK(std::abs(grid) == doctest::Approx(std::exp(-dz2 / (4 * 0.25))).epsilon(1e-10));
        CHECK(std::abs(grid) == doctest::Approx(std::abs(overlap_oracle(0.25, a[0], a[1], b[0], b[1]))).epsilon(1e-8));
      }
  }

  TEST_CASE("centres near the boundary are rejected") {
    const GridSpec g = line(64, 4.0, 0.25);
    CHECK_THROWS_AS(coherent_state(g, 3.5, 0.0), std::domain_error);
    CHECK_THROWS_AS(coherent_state(g, 0.0, 12.0), std::domain_error);
    CHECK_NOTHROW(coherent_state(g, 0.0, 0.0));
  }

  TEST_CASE("density matrices") {
    const GridSpec g = line(64, 6.0, 0.5);
    const DensityMatrix rho = DensityMatrix::pure(coherent_state(g, 0.2, 0.1));
    CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rho.hermiticity_error() <= 1e-15);
    CHECK(rho.min_rayleigh(50, 3) >= -1e-14);
  }

  TEST_CASE("partial traces") {
    GridSpec g = line(32, 6.0, 0.5);
    g.n_particles = 2;
    SUBCASE("product state") {
      const WaveFunction psi = coherent_product(g, {0.5, -0.5}, {0.2, 0.0});
      const DensityMatrix r1 = partial_trace(psi, 1);
      const DensityMatrix phi = DensityMatrix::pure(coherent_state(g.single(), 0.5, 0.2));
      CHECK((r1.matrix - phi.matrix).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(r1.trace() == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(trace_distance(axis_marginal(psi, 1), DensityMatrix::pure(coherent_state(g.single(), -0.5, 0.0))) <= 1e-10);
    }
    SUBCASE("symmetrized two-mode state has two equal eigenvalues") {
      WaveFunction a = coherent_product(g, {-1.5, 1.5}, {0.0, 0.0});
      const WaveFunction b = coherent_product(g, {1.5, -1.5}, {0.0, 0.0});
      for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] += b.values[i];
      a.normalize();
      const DensityMatrix r1 = partial_trace(a, 1);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r1.matrix);
      const auto ev = es.eigenvalues();
      const Eigen::Index n = ev.size();
      // With s = <a|b> = exp(-|dz|^2/(4 eps)) the nonzero eigenvalues are (1 +- s)^2 / (2 (1 + s^2)).
      const double s = std::exp(-9.0 / (4 * 0.5));
      CHECK(ev(n - 1) == doctest::Approx((1 + s) * (1 + s) / (2 * (1 + s * s))).epsilon(1e-8));
      CHECK(ev(n - 2) == doctest::Approx((1 - s) * (1 - s) / (2 * (1 + s * s))).epsilon(1e-8));
      CHECK(ev(n - 3) <= 1e-12);
      CHECK(r1.trace() == doctest::Approx(1.0).epsilon(1e-10));
    }
  }

  TEST_CASE("trace distance") {
    const GridSpec g = line(64, 6.0, 0.5);
    const DensityMatrix a = DensityMatrix::pure(coherent_state(g, 0.0, 0.0));
    const DensityMatrix b = DensityMatrix::pure(coherent_state(g, 1.0, 0.0));
    // Pure states: ||a - b||_1 = 2 sqrt(1 - |<a|b>|^2).
    const double ov = std::exp(-1.0 / (4 * 0.5));
    CHECK(trace_distance(a, b) == doctest::Approx(2.0 * std::sqrt(1.0 - ov * ov)).epsilon(1e-9));
    CHECK(trace_distance(a, a) <= 1e-14);
  }

  TEST_CASE("checkpoint round trip") {
    GridSpec g = line(16, 3.0, 0.25);
    g.n_particles = 2;
    g.doubled = true;
    WaveFunction psi = WaveFunction::zeros(g);
    CounterRng rng(7, 0);
    for (auto& v : psi.values) v = cplx(rng.normal(), rng.normal());
    psi.time = 0.37;
    const auto path = std::filesystem::temp_directory_path() / "mflab_state_test.bin";
    save_checkpoint(path.string(), psi);
    const WaveFunction back = load_checkpoint(path.string());
    CHECK(back.grid.axes() == 4);
    CHECK(back.grid.epsilon == 0.25);
    CHECK(back.time == 0.37);
    REQUIRE(back.values.size() == psi.values.size());
    bool same = true;
    for (std::size_t i = 0; i < psi.values.size(); ++i) same = same && back.values[i] == psi.values[i];
    CHECK(same);
    std::filesystem::remove(path);
  }
}
