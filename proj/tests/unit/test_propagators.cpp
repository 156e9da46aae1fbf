#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

#include "mflab/quantum.hpp"

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

// Free evolution of the coherent state at (q, p) under i d_t psi = -(eps/2) psi''.
cplx free_gaussian(double x, double t, double q, double p, double eps) {
  const cplx s(1.0, t);
  const double u = x - q - p * t;
  return std::pow(std::numbers::pi * eps, -0.25) / std::sqrt(s) * std::exp(-u * u / (2.0 * eps * s)) *
         std::polar(1.0, (p * x - 0.5 * p * p * t) / eps);
}

Eigen::VectorXcd as_vector(const WaveFunction& psi) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(psi.values.size()));
  for (std::size_t i = 0; i < psi.values.size(); ++i) v(static_cast<Eigen::Index>(i)) = psi.values[i];
  return v;
}

double energy_error(const GridSpec& g, const Potential& V, double dt) {
  HartreePropagator prop(g, V, dt);
  WaveFunction psi = coherent_state(g, -0.5, 0.8);
  const double E0 = hartree_energy(psi, V);
  double worst = 0.0;
  const int steps = static_cast<int>(std::round(1.0 / dt));
  for (int s = 0; s < steps; ++s) {
    prop.step(psi);
    worst = std::max(worst, std::abs(hartree_energy(psi, V) - E0));
  }
  return worst / std::abs(E0);
}

}  // namespace

TEST_SUITE("propagators") {
  TEST_CASE("free coherent state follows the closed form") {
    const GridSpec g = line(256, 10.0, 0.25);
    const double q = -1.0, p = 1.0, dt = 0.01;
    WaveFunction psi = coherent_state(g, q, p);
    NBodyPropagator prop(g, Potential::gaussian(0.0, 1.0, 1), dt);
    for (int s = 0; s < 100; ++s) prop.step(psi);
    const auto x = g.x_axis();
    double err = 0.0;
    for (int i = 0; i < 256; ++i) err = std::max(err, std::abs(psi.values[i] - free_gaussian(x[i], 1.0, q, p, g.epsilon)));
    CHECK(err < 1e-6);
    const PhaseMoments m = moments(DensityMatrix::pure(psi));
    CHECK(m.mean_x == doctest::Approx(q + p).epsilon(1e-8));
    CHECK(m.var_x == doctest::Approx(0.5 * g.epsilon * 2.0).epsilon(1e-8));
  }

  TEST_CASE("unitarity of the N-body step") {
    GridSpec g = line(32, 5.0, 0.5);
    g.n_particles = 2;
    WaveFunction psi = coherent_product(g, {-0.8, 0.6}, {0.3, -0.2});
    NBodyPropagator prop(g, Potential::gaussian(2.0, 0.7, 1), 0.01);
    for (int s = 0; s < 1000; ++s) prop.step(psi);
    CHECK(std::abs(psi.norm() - 1.0) <= 1e-10);
  }

  TEST_CASE("N-body step preserves exchange symmetry") {
    GridSpec g = line(32, 5.0, 0.5);
    g.n_particles = 2;
    WaveFunction psi = coherent_product(g, {-0.8, 0.6}, {0.3, -0.2});
    const WaveFunction swapped = coherent_product(g, {0.6, -0.8}, {-0.2, 0.3});
    for (std::size_t i = 0; i < psi.values.size(); ++i) psi.values[i] += swapped.values[i];
    psi.normalize();
    NBodyPropagator prop(g, Potential::cosine(1.5, 2.0, 1.0, 1), 0.02);
    for (int s = 0; s < 50; ++s) prop.step(psi);
    double asym = 0.0;
    for (int a = 0; a < 32; ++a)
      for (int b = 0; b < 32; ++b) asym = std::max(asym, std::abs(psi.values[a * 32 + b] - psi.values[b * 32 + a]));
    CHECK(asym <= 1e-13);
  }

  TEST_CASE("one step against the dense matrix exponential") {
    const GridSpec g = line(32, 4.0, 0.5);
    const int n = 32;
    const Potential U = Potential::gaussian(3.0, 0.8, 1);
    const Potential none = Potential::gaussian(0.0, 1.0, 1);
    // H = -(eps/2) Laplacian (spectral) + U / eps, in grid values.
    Eigen::MatrixXcd F(n, n);
    const auto k = g.k_axis();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) F(a, b) = std::polar(1.0, -2.0 * std::numbers::pi * a * b / n);
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(n, n);
    for (int j = 0; j < n; ++j) D(j, j) = 0.5 * g.epsilon * k[j] * k[j];
    Eigen::MatrixXcd H = F.adjoint() * D * F / static_cast<double>(n);
    const auto x = g.x_axis();
    for (int i = 0; i < n; ++i) H(i, i) += U.eval1(x[i]) / g.epsilon;

    const WaveFunction psi0 = coherent_state(g, 0.3, 0.4);
    std::vector<double> errs;
    for (double dt : {0.04, 0.02, 0.01}) {
      const Eigen::MatrixXcd prop = (cplx(0.0, -dt) * H).exp();
      const Eigen::VectorXcd exact = prop * as_vector(psi0);
      const WaveFunction split = split_step_nbody(psi0, none, dt, &U);
      errs.push_back((as_vector(split) - exact).norm());
    }
    const double slope1 = std::log2(errs[0] / errs[1]);
    const double slope2 = std::log2(errs[1] / errs[2]);
    CHECK(slope1 == doctest::Approx(3.0).epsilon(0.1));
    CHECK(slope2 == doctest::Approx(3.0).epsilon(0.1));
  }

  TEST_CASE("time step precheck") {
    const GridSpec g = line(256, 4.0, 0.5);
    CHECK_THROWS_AS(NBodyPropagator(g, Potential::gaussian(1.0, 1.0, 1), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(HartreePropagator(g, Potential::gaussian(1.0, 1.0, 1), 1.0), std::invalid_argument);
  }

  TEST_CASE("Hartree") {
    const GridSpec g = line(128, 8.0, 0.25);
    SUBCASE("V = 0 equals the free step") {
      const Potential zero = Potential::gaussian(0.0, 1.0, 1);
      const WaveFunction psi = coherent_state(g, 0.2, 0.5);
      const WaveFunction a = hartree_step(psi, zero, 0.01);
      const WaveFunction b = split_step_nbody(psi, zero, 0.01);
      double d = 0.0;
      for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
      CHECK(d <= 1e-15);
    }
    SUBCASE("Hartree potential of a point-like density") {
      const Potential V = Potential::gaussian(1.0, 1.0, 1);
      const WaveFunction psi = coherent_state(g, 0.0, 0.0);
      const auto vr = hartree_potential(psi, V);
      // Gaussian V convolved with |psi|^2 (variance eps/2) is Gaussian with variance 1 + eps/2.
      const double s2 = 1.0 + g.epsilon / 2.0;
      const auto x = g.x_axis();
      for (int i = 32; i < 96; i += 7) CHECK(vr[i] == doctest::Approx(std::exp(-x[i] * x[i] / (2 * s2)) / std::sqrt(s2)).epsilon(1e-10));
    }
    SUBCASE("mass is conserved") {
      const Potential V = Potential::gaussian(2.0, 1.0, 1);
      HartreePropagator prop(g, V, 0.01);
      WaveFunction psi = coherent_state(g, 0.5, -0.5);
      for (int s = 0; s < 1000; ++s) prop.step(psi);
      CHECK(std::abs(psi.norm() - 1.0) <= 1e-12);
    }
    SUBCASE("energy error is second order") {
      const Potential V = Potential::gaussian(2.0, 1.0, 1);
      const double ratio = energy_error(g, V, 0.02) / energy_error(g, V, 0.01);
      CHECK(ratio == doctest::Approx(4.0).epsilon(0.2));
    }
  }

  TEST_CASE("coupled evolution") {
    GridSpec g = line(32, 5.0, 0.5);
    g.n_particles = 2;
    g.doubled = true;
    const std::vector<double> q{0.3, 0.3, 0.3, 0.3}, p{0.2, 0.2, 0.2, 0.2};
    SUBCASE("V = 0 keeps the marginals equal") {
      WaveFunction Phi = coherent_product(g, q, p);
      WaveFunction ref = coherent_state(g.single(), 0.3, 0.2);
      coupled_quantum_advance(Phi, ref, Potential::gaussian(0.0, 1.0, 1), 0.01, 50);
      for (int j = 0; j < 2; ++j)
        CHECK(trace_distance(axis_marginal(Phi, j), axis_marginal(Phi, j + 2)) <= 1e-12);
    }
    SUBCASE("X half follows the Hartree tensor square; norm is conserved") {
      const Potential V = Potential::gaussian(1.5, 1.0, 1);
      WaveFunction Phi = coherent_product(g, q, p);
      WaveFunction ref = coherent_state(g.single(), 0.3, 0.2);
      CoupledPropagator prop(g, V, 0.01);
      for (int s = 0; s < 1000; ++s) prop.step(Phi, ref);
      CHECK(std::abs(Phi.norm() - 1.0) <= 1e-10);
      GridSpec g2 = g.single();
      g2.n_particles = 2;
      WaveFunction sq = WaveFunction::zeros(g2);
      for (int a = 0; a < 32; ++a)
        for (int b = 0; b < 32; ++b) sq.values[a * 32 + b] = ref.values[a] * ref.values[b];
      CHECK(trace_distance(partial_trace(Phi, 2), DensityMatrix::pure(sq)) <= 1e-8);
      // The Y half interacts pairwise and drifts away from the mean-field product.
      CHECK(dobrushin_quantum_functional(Phi, g.epsilon, 2) > 2 * g.epsilon);
    }
    SUBCASE("misaligned reference is rejected") {
      WaveFunction Phi = coherent_product(g, q, p);
      WaveFunction ref = coherent_state(g.single(), 0.3, 0.2);
      ref.time = 1.0;
      CHECK_THROWS_AS(coupled_quantum_advance(Phi, ref, Potential::gaussian(1.0, 1.0, 1), 0.01, 1), std::invalid_argument);
    }
  }
}
