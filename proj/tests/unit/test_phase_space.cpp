#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "mflab/quantum.hpp"
#include "mflab/rng.hpp"

using namespace mflab;
using namespace mflab::quantum;

namespace {

constexpr double kPi = std::numbers::pi;

GridSpec line(int n, double L, double eps) {
  GridSpec g;
  g.points_per_axis = n;
  g.box_half_width = L;
  g.epsilon = eps;
  return g;
}

SymbolMeasure atoms(std::initializer_list<std::array<double, 2>> zs) {
  SymbolMeasure mu;
  mu.points.resize(static_cast<Eigen::Index>(zs.size()), 2);
  Eigen::Index m = 0;
  for (const auto& z : zs) {
    mu.points(m, 0) = z[0];
    mu.points(m, 1) = z[1];
    ++m;
  }
  mu.weights = Eigen::VectorXd::Constant(m, 1.0 / m);
  return mu;
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("phase_space") {
  TEST_CASE("Toeplitz operators") {
    const GridSpec g = line(64, 6.0, 0.5);
    SUBCASE("single atom is the coherent projector") {
      const DensityMatrix T = toeplitz_operator(g, atoms({{0.3, -0.2}}));
      const Eigen::VectorXcd v = coherent_vector(g, 0.3, -0.2);
      CHECK((T.matrix - v * v.adjoint()).cwiseAbs().maxCoeff() <= 1e-15);
    }
    SUBCASE("two atoms: trace one, rank two, Hermitian") {
      const DensityMatrix T = toeplitz_operator(g, atoms({{-1.0, 0.0}, {1.0, 0.5}}));
      CHECK(T.trace() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(T.hermiticity_error() <= 1e-15);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(T.matrix);
      const auto ev = es.eigenvalues();
      CHECK(ev(ev.size() - 3) <= 1e-12);
      CHECK(ev(ev.size() - 2) > 0.1);
      CHECK(ev.minCoeff() >= -1e-12);
    }
    SUBCASE("atoms outside the box are rejected") {
      CHECK_THROWS_AS(toeplitz_operator(g, atoms({{5.9, 0.0}})), std::domain_error);
    }
  }

  TEST_CASE("Wigner transform") {
    const GridSpec g = line(256, 8.0, 0.25);
    const double eps = g.epsilon;
    SUBCASE("coherent state is the phase-space Gaussian") {
      const double q = 0.3, p = -0.6;
      const PhaseSpaceFunction W = wigner_transform(DensityMatrix::pure(coherent_state(g, q, p)));
      double err = 0.0;
      for (std::size_t i = 0; i < W.x.size(); ++i)
        for (std::size_t k = 0; k < W.xi.size(); ++k) {
          const double r2 = (W.x[i] - q) * (W.x[i] - q) + (W.xi[k] - p) * (W.xi[k] - p);
          err = std::max(err, std::abs(W.values(i, k) - std::exp(-r2 / eps) / (kPi * eps)));
        }
      CHECK(err < 1e-6);
      CHECK(W.integral() == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("linear in the state") {
      const DensityMatrix a = DensityMatrix::pure(coherent_state(g, -1.0, 0.0));
      const DensityMatrix b = DensityMatrix::pure(coherent_state(g, 1.0, 0.5));
      DensityMatrix mix = a;
      mix.matrix = 0.5 * (a.matrix + b.matrix);
      const Eigen::MatrixXd lin = 0.5 * (wigner_transform(a).values + wigner_transform(b).values);
      CHECK(max_abs_diff(wigner_transform(mix).values, lin) <= 1e-13);
    }
    SUBCASE("cat state has negative interference fringes") {
      WaveFunction cat = coherent_state(g, -2.0, 0.0);
      const WaveFunction b = coherent_state(g, 2.0, 0.0);
      for (std::size_t i = 0; i < cat.values.size(); ++i) cat.values[i] += b.values[i];
      cat.normalize();
      const PhaseSpaceFunction W = wigner_transform(DensityMatrix::pure(cat));
      CHECK(W.values.minCoeff() < -0.1);
      CHECK(W.integral() == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  TEST_CASE("Husimi transform") {
    const GridSpec g = line(128, 8.0, 0.25);
    const double eps = g.epsilon;
    SUBCASE("coherent state") {
      const double q = -0.4, p = 0.7;
      const PhaseSpaceFunction H = husimi_transform(DensityMatrix::pure(coherent_state(g, q, p)));
      double err = 0.0;
      for (std::size_t i = 0; i < H.x.size(); ++i)
        for (std::size_t k = 0; k < H.xi.size(); ++k) {
          const double r2 = (H.x[i] - q) * (H.x[i] - q) + (H.xi[k] - p) * (H.xi[k] - p);
          err = std::max(err, std::abs(H.values(i, k) - std::exp(-r2 / (2 * eps)) / (2 * kPi * eps)));
        }
      CHECK(err < 1e-10);
      CHECK(H.integral() == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("direct and smoothing routes agree, values nonnegative") {
      WaveFunction cat = coherent_state(g, -1.5, 0.3);
      const WaveFunction b = coherent_state(g, 1.0, -0.4);
      for (std::size_t i = 0; i < cat.values.size(); ++i) cat.values[i] += cplx(0.0, 1.0) * b.values[i];
      cat.normalize();
      const DensityMatrix rho = DensityMatrix::pure(cat);
      const PhaseSpaceFunction direct = husimi_transform(rho);
      const PhaseSpaceFunction smooth = husimi_from_wigner(wigner_transform(rho), eps);
      CHECK(max_abs_diff(direct.values, smooth.values) < 1e-6);
      CHECK(direct.values.minCoeff() >= -1e-12);
      CHECK(direct.integral() == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(husimi_value(rho, direct.x[70], direct.xi[60]) == doctest::Approx(direct.values(70, 60)).epsilon(1e-12));
    }
    SUBCASE("Husimi cloud is a probability measure centred on the state") {
      const DiscreteMeasure c = husimi_cloud(DensityMatrix::pure(coherent_state(g, 0.5, -0.5)));
      CHECK(c.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(c.weights.dot(c.points.col(0)) == doctest::Approx(0.5).epsilon(1e-6));
      CHECK(c.weights.dot(c.points.col(1)) == doctest::Approx(-0.5).epsilon(1e-6));
    }
  }

  TEST_CASE("trace identity for discrete symbols") {
    const GridSpec g = line(64, 6.0, 0.5);
    CounterRng rng(4, 0);
    for (int trial = 0; trial < 5; ++trial) {
      SymbolMeasure mu = atoms({{rng.uniform(-1, 1), rng.uniform(-1, 1)}, {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                                {rng.uniform(-1, 1), rng.uniform(-1, 1)}});
      const DensityMatrix R =
          toeplitz_operator(g, atoms({{rng.uniform(-1, 1), rng.uniform(-1, 1)}, {rng.uniform(-1, 1), rng.uniform(-1, 1)}}));
      double husimi_side = 0.0;
      for (Eigen::Index m = 0; m < mu.points.rows(); ++m)
        husimi_side += mu.weights(m) * 2 * kPi * g.epsilon * husimi_value(R, mu.points(m, 0), mu.points(m, 1));
      const DensityMatrix T = toeplitz_operator(g, mu);
      const double direct = (T.matrix * R.matrix).trace().real();
      CHECK(direct == doctest::Approx(husimi_side).epsilon(1e-6));
      CHECK(toeplitz_pairing(mu, R) == doctest::Approx(direct).epsilon(1e-10));
    }
  }

  TEST_CASE("Toeplitz lift of the quadratic symbol") {
    // Lattice approximation of (2 pi eps)^{-1} q^2 dq dp paired with a coherent state.
    const GridSpec g = line(128, 8.0, 0.25);
    const double eps = g.epsilon, q0 = 0.6, p0 = -0.3;
    const DensityMatrix rho = DensityMatrix::pure(coherent_state(g, q0, p0));
    const int m = 121;
    const double half = 8.0 * std::sqrt(eps), h = 2 * half / (m - 1);
    double lift = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const double q = q0 - half + h * a, p = p0 - half + h * b;
        lift += h * h / (2 * kPi * eps) * q * q * 2 * kPi * eps * husimi_value(rho, q, p);
      }
    // trace((x^2 + eps/2) rho) for the coherent state is q0^2 + eps.
    const PhaseMoments mom = moments(rho);
    CHECK(lift == doctest::Approx(mom.var_x + mom.mean_x * mom.mean_x + eps / 2).epsilon(1e-4));
    CHECK(lift == doctest::Approx(q0 * q0 + eps).epsilon(1e-4));
  }
}
