#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "mflab/quantum.hpp"

namespace mflab {

namespace {
constexpr double kPi = std::numbers::pi;
}

DiscreteMeasure PhaseSpaceFunction::to_measure(double relative_cutoff) const {
  const double vmax = values.maxCoeff();
  if (!(vmax > 0.0)) throw std::domain_error("phase-space function has no positive mass");
  const double cut = relative_cutoff * vmax;
  std::vector<std::array<double, 2>> pts;
  std::vector<double> w;
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index k = 0; k < values.cols(); ++k) {
      const double v = values(i, k);
      if (v > cut && v > 0.0) {
        pts.push_back({x[i], xi[k]});
        w.push_back(v);
      }
    }
  DiscreteMeasure mu;
  mu.points.resize(static_cast<Eigen::Index>(pts.size()), 2);
  mu.weights.resize(static_cast<Eigen::Index>(pts.size()));
  double total = 0.0;
  for (double v : w) total += v;
  for (std::size_t m = 0; m < pts.size(); ++m) {
    mu.points(m, 0) = pts[m][0];
    mu.points(m, 1) = pts[m][1];
    mu.weights(m) = w[m] / total;
  }
  return mu;
}

void PhaseSpaceFunction::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  out << "x,xi,value\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index k = 0; k < values.cols(); ++k) out << x[i] << ',' << xi[k] << ',' << values(i, k) << '\n';
}

namespace quantum {

namespace {

Eigen::VectorXcd product_vector(const GridSpec& g, const Eigen::Ref<const Eigen::VectorXd>& atom) {
  const int A = g.axes();
  const GridSpec s = g.single();
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(1);
  for (int a = 0; a < A; ++a) {
    const double q = atom(2 * a), p = atom(2 * a + 1);
    check_inside(s, q, p);
    const Eigen::VectorXcd f = coherent_vector(s, q, p);
    Eigen::VectorXcd next(v.size() * f.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) next.segment(i * f.size(), f.size()) = v(i) * f;
    v.swap(next);
  }
  return v;
}

void check_symbol(const GridSpec& g, const SymbolMeasure& symbol) {
  if (symbol.points.cols() != 2 * g.axes())
    throw std::invalid_argument("symbol dimension must be 2 * (number of particles)");
  symbol.validate(1e-9);
}

}  // namespace

DensityMatrix toeplitz_operator(const GridSpec& g, const SymbolMeasure& symbol) {
  check_symbol(g, symbol);
  const std::size_t n = g.size();
  check_memory(n * n * sizeof(cplx), "Toeplitz operator");
  DensityMatrix rho;
  rho.grid = g;
  rho.matrix = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index m = 0; m < symbol.points.rows(); ++m) {
    if (symbol.weights(m) == 0.0) continue;
    const Eigen::VectorXcd v = product_vector(g, symbol.points.row(m).transpose());
    rho.matrix.noalias() += symbol.weights(m) * (v * v.adjoint());
  }
  return rho;
}

double toeplitz_pairing(const SymbolMeasure& symbol, const DensityMatrix& rho) {
  check_symbol(rho.grid, symbol);
  double s = 0.0;
  for (Eigen::Index m = 0; m < symbol.points.rows(); ++m) {
    const Eigen::VectorXcd v = product_vector(rho.grid, symbol.points.row(m).transpose());
    s += symbol.weights(m) * (v.adjoint() * rho.matrix * v)(0).real();
  }
  return s;
}

double husimi_value(const DensityMatrix& rho, double q, double p) {
  if (rho.grid.axes() != 1) throw std::invalid_argument("husimi_value: single-particle state expected");
  const Eigen::VectorXcd v = coherent_vector(rho.grid, q, p, false);
  return (v.adjoint() * rho.matrix * v)(0).real() / (2.0 * kPi * rho.grid.epsilon);
}

PhaseSpaceFunction wigner_transform(const DensityMatrix& rho) {
  const GridSpec& g = rho.grid;
  if (g.axes() != 1) throw std::invalid_argument("wigner_transform: single-particle state expected");
  const int n = g.points_per_axis;
  const double eps = g.epsilon;
  const double dx = g.dx();
  PhaseSpaceFunction W;
  W.x = g.x_axis();
  W.xi.resize(n);
  const double dxi = eps * kPi / (n * dx);
  for (int k = 0; k < n; ++k) W.xi[k] = (k - n / 2) * dxi;
  W.values.resize(n, n);
  const std::vector<int> shape{n};
  CVec f(n);
  // x +- y/2 with y = 2 j dx lands on grid nodes; the kernel is taken as zero
  // outside the box instead of being wrapped periodically.
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < n; ++m) {
      const int j = m < n / 2 ? m : m - n;
      const int a = i + j, b = i - j;
      f[m] = (a >= 0 && a < n && b >= 0 && b < n) ? rho.matrix(a, b) : cplx(0.0, 0.0);
    }
    fft_forward(f.data(), shape);
    for (int m = 0; m < n; ++m) {
      const int k = m < n / 2 ? m : m - n;
      W.values(i, k + n / 2) = f[m].real() / (kPi * eps);
    }
  }
  return W;
}

PhaseSpaceFunction husimi_transform(const DensityMatrix& rho, const std::vector<double>& q,
                                    const std::vector<double>& p) {
  const GridSpec& g = rho.grid;
  if (g.axes() != 1) throw std::invalid_argument("husimi_transform: single-particle state expected");
  const int n = g.points_per_axis;
  const double eps = g.epsilon;
  const double dx = g.dx();
  const auto x = g.x_axis();
  const double pref = std::pow(kPi * eps, -0.25) * std::sqrt(dx);
  PhaseSpaceFunction H;
  H.x = q;
  H.xi = p;
  H.values.resize(static_cast<Eigen::Index>(q.size()), static_cast<Eigen::Index>(p.size()));
  std::vector<double> gq(n);
  std::vector<int> support;
  std::vector<cplx> c(n);
  for (std::size_t a = 0; a < q.size(); ++a) {
    support.clear();
    for (int i = 0; i < n; ++i) {
      const double u = x[i] - q[a];
      gq[i] = pref * std::exp(-u * u / (2.0 * eps));
      if (gq[i] > 1e-20) support.push_back(i);
    }
    // c_D = sum_{i - j = D} g_i g_j M_ij for D >= 0.
    std::fill(c.begin(), c.end(), cplx(0.0, 0.0));
    for (int i : support)
      for (int j : support)
        if (i >= j) c[i - j] += gq[i] * gq[j] * rho.matrix(i, j);
    for (std::size_t b = 0; b < p.size(); ++b) {
      const cplx step = std::polar(1.0, -p[b] * dx / eps);
      cplx ph = step;
      double s = c[0].real();
      for (int D = 1; D < n; ++D) {
        s += 2.0 * (c[D] * ph).real();
        ph *= step;
      }
      H.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s / (2.0 * kPi * eps);
    }
  }
  return H;
}

PhaseSpaceFunction husimi_transform(const DensityMatrix& rho) {
  const PhaseSpaceFunction lattice = [&] {
    PhaseSpaceFunction L;
    const int n = rho.grid.points_per_axis;
    L.x = rho.grid.x_axis();
    const double dxi = rho.grid.epsilon * kPi / (n * rho.grid.dx());
    for (int k = 0; k < n; ++k) L.xi.push_back((k - n / 2) * dxi);
    return L;
  }();
  return husimi_transform(rho, lattice.x, lattice.xi);
}

PhaseSpaceFunction husimi_from_wigner(const PhaseSpaceFunction& W, double eps) {
  auto kernel = [eps](const std::vector<double>& axis) {
    const Eigen::Index n = static_cast<Eigen::Index>(axis.size());
    const double h = n > 1 ? axis[1] - axis[0] : 1.0;
    const double c = h / std::sqrt(kPi * eps);
    Eigen::MatrixXd G(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index i = 0; i < n; ++i) {
        const double u = axis[a] - axis[i];
        G(a, i) = c * std::exp(-u * u / eps);
      }
    return G;
  };
  PhaseSpaceFunction H;
  H.x = W.x;
  H.xi = W.xi;
  H.values = kernel(W.x) * W.values * kernel(W.xi).transpose();
  return H;
}

DiscreteMeasure husimi_cloud(const DensityMatrix& rho, const HusimiLattice& lattice) {
  if (lattice.points < 2) throw std::invalid_argument("husimi lattice needs at least 2 points per axis");
  const PhaseMoments m = moments(rho);
  const double eps = rho.grid.epsilon;
  const double sx = std::sqrt(m.var_x + 0.5 * eps);
  const double sp = std::sqrt(m.var_p + 0.5 * eps);
  const double hx = lattice.width_sigmas * sx, hp = lattice.width_sigmas * sp;
  std::vector<double> q(lattice.points), p(lattice.points);
  for (int i = 0; i < lattice.points; ++i) {
    const double t = -1.0 + 2.0 * i / (lattice.points - 1);
    q[i] = m.mean_x + t * hx;
    p[i] = m.mean_p + t * hp;
  }
  return husimi_transform(rho, q, p).to_measure();
}

}  // namespace quantum
}  // namespace mflab
