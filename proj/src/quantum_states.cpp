#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mflab/quantum.hpp"
#include "mflab/rng.hpp"

namespace mflab {

namespace {
constexpr double kPi = std::numbers::pi;
}

WaveFunction WaveFunction::zeros(const GridSpec& g) {
  g.validate();
  WaveFunction psi;
  psi.grid = g;
  psi.values.assign(g.size(), cplx(0.0, 0.0));
  return psi;
}

double WaveFunction::norm() const {
  double s = 0.0;
  for (const cplx& v : values) s += std::norm(v);
  return std::sqrt(s * grid.cell_volume());
}

void WaveFunction::normalize() {
  const double n = norm();
  if (!(n > 0.0)) throw std::domain_error("cannot normalize a zero wave function");
  for (cplx& v : values) v /= n;
}

DensityMatrix DensityMatrix::pure(const WaveFunction& psi) {
  const std::size_t n = psi.values.size();
  check_memory(n * n * sizeof(cplx), "pure-state density matrix");
  Eigen::VectorXcd c(static_cast<Eigen::Index>(n));
  const double s = std::sqrt(psi.grid.cell_volume());
  for (std::size_t i = 0; i < n; ++i) c(static_cast<Eigen::Index>(i)) = psi.values[i] * s;
  DensityMatrix rho;
  rho.grid = psi.grid;
  rho.matrix = c * c.adjoint();
  return rho;
}

double DensityMatrix::min_rayleigh(int count, std::uint64_t seed) const {
  CounterRng rng(seed, 0);
  const Eigen::Index n = matrix.rows();
  double worst = std::numeric_limits<double>::infinity();
  Eigen::VectorXcd v(n);
  for (int t = 0; t < count; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(rng.normal(), rng.normal());
    const double q = (v.adjoint() * matrix * v)(0).real() / v.squaredNorm();
    worst = std::min(worst, q);
  }
  return worst;
}

namespace quantum {

void check_inside(const GridSpec& g, double q, double p) {
  const double eps = g.epsilon;
  const double L = g.box_half_width;
  const double pos_tail = 0.5 * std::erfc((L - q) / std::sqrt(eps)) + 0.5 * std::erfc((L + q) / std::sqrt(eps));
  // |phi^(k)|^2 is Gaussian in k with mean p/eps and variance 1/(2 eps).
  const double kc = p / eps;
  const double kmax = g.k_max();
  const double mom_tail =
      0.5 * std::erfc((kmax - kc) * std::sqrt(eps)) + 0.5 * std::erfc((kmax + kc) * std::sqrt(eps));
  if (!(pos_tail < 1e-12) || !(mom_tail < 1e-12)) {
    throw std::domain_error("coherent state at (" + std::to_string(q) + ", " + std::to_string(p) +
                            ") is not resolved by the grid");
  }
}

Eigen::VectorXcd coherent_vector(const GridSpec& g, double q, double p, bool renormalize) {
  const int n = g.points_per_axis;
  const double eps = g.epsilon;
  const double dx = g.dx();
  const auto x = g.x_axis();
  const double pref = std::pow(kPi * eps, -0.25) * std::sqrt(dx);
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) {
    const double u = x[i] - q;
    v(i) = pref * std::exp(-u * u / (2.0 * eps)) * std::polar(1.0, p * x[i] / eps);
  }
  if (renormalize) v /= v.norm();
  return v;
}

WaveFunction coherent_state(const GridSpec& g, double q, double p) {
  GridSpec s = g.single();
  check_inside(s, q, p);
  WaveFunction psi = WaveFunction::zeros(s);
  const Eigen::VectorXcd v = coherent_vector(s, q, p);
  const double inv = 1.0 / std::sqrt(s.dx());
  for (int i = 0; i < s.points_per_axis; ++i) psi.values[i] = v(i) * inv;
  return psi;
}

WaveFunction coherent_product(const GridSpec& g, const std::vector<double>& q, const std::vector<double>& p) {
  const int A = g.axes();
  if (static_cast<int>(q.size()) != A || static_cast<int>(p.size()) != A)
    throw std::invalid_argument("coherent_product: need one (q, p) per axis");
  const GridSpec s = g.single();
  std::vector<Eigen::VectorXcd> f;
  for (int a = 0; a < A; ++a) {
    check_inside(s, q[a], p[a]);
    f.push_back(coherent_vector(s, q[a], p[a]) / std::sqrt(s.dx()));
  }
  WaveFunction psi = WaveFunction::zeros(g);
  const int n = g.points_per_axis;
  std::vector<int> idx(A, 0);
  for (std::size_t lin = 0; lin < psi.values.size(); ++lin) {
    cplx v = 1.0;
    for (int a = 0; a < A; ++a) v *= f[a](idx[a]);
    psi.values[lin] = v;
    for (int a = A - 1; a >= 0; --a) {
      if (++idx[a] < n) break;
      idx[a] = 0;
    }
  }
  return psi;
}

namespace {

// F M F^dagger for a single-particle matrix, with the unitary DFT.
Eigen::MatrixXcd to_momentum(const Eigen::MatrixXcd& M) {
  const int n = static_cast<int>(M.rows());
  const std::vector<int> shape{n};
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  CVec col(n);
  Eigen::MatrixXcd A(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[i] = M(i, j);
    fft_forward(col.data(), shape);
    for (int i = 0; i < n; ++i) A(i, j) = col[i] * s;
  }
  Eigen::MatrixXcd B = A.adjoint();
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[i] = B(i, j);
    fft_forward(col.data(), shape);
    for (int i = 0; i < n; ++i) B(i, j) = col[i] * s;
  }
  return B;
}

}  // namespace

PhaseMoments moments(const DensityMatrix& rho) {
  const GridSpec& g = rho.grid;
  if (g.axes() != 1) throw std::invalid_argument("moments: single-particle state expected");
  const auto x = g.x_axis();
  const auto k = g.k_axis();
  const int n = g.points_per_axis;
  double tr = 0.0, mx = 0.0, mx2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = rho.matrix(i, i).real();
    tr += w;
    mx += w * x[i];
    mx2 += w * x[i] * x[i];
  }
  const Eigen::MatrixXcd P = to_momentum(rho.matrix);
  double tp = 0.0, mp = 0.0, mp2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = P(i, i).real();
    const double pk = g.epsilon * k[i];
    tp += w;
    mp += w * pk;
    mp2 += w * pk * pk;
  }
  PhaseMoments m;
  m.mean_x = mx / tr;
  m.var_x = std::max(0.0, mx2 / tr - m.mean_x * m.mean_x);
  m.mean_p = mp / tp;
  m.var_p = std::max(0.0, mp2 / tp - m.mean_p * m.mean_p);
  return m;
}

DensityMatrix partial_trace(const WaveFunction& psi, int n) {
  const int A = psi.grid.axes();
  if (n < 1 || n > A) throw std::invalid_argument("partial_trace: bad number of kept axes");
  const std::size_t pts = static_cast<std::size_t>(psi.grid.points_per_axis);
  std::size_t rows = 1;
  for (int a = 0; a < n; ++a) rows *= pts;
  const std::size_t cols = psi.values.size() / rows;
  check_memory(rows * rows * sizeof(cplx), "reduced density matrix");
  // Psi as a rows x cols matrix (row-major) in orthonormal coordinates.
  Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> P(
      psi.values.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  DensityMatrix rho;
  rho.grid = psi.grid;
  rho.grid.doubled = false;
  rho.grid.n_particles = n;
  rho.matrix = (P * P.adjoint()) * psi.grid.cell_volume();
  return rho;
}

DensityMatrix axis_marginal(const WaveFunction& psi, int axis) {
  const int A = psi.grid.axes();
  if (axis < 0 || axis >= A) throw std::invalid_argument("axis_marginal: axis out of range");
  const Eigen::Index n = psi.grid.points_per_axis;
  std::size_t outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= static_cast<std::size_t>(n);
  for (int a = axis + 1; a < A; ++a) inner *= static_cast<std::size_t>(n);
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
  using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  for (std::size_t o = 0; o < outer; ++o) {
    Eigen::Map<const RowMat> B(psi.values.data() + o * static_cast<std::size_t>(n) * inner, n,
                               static_cast<Eigen::Index>(inner));
    M.noalias() += B * B.adjoint();
  }
  DensityMatrix rho;
  rho.grid = psi.grid.single();
  rho.matrix = M * psi.grid.cell_volume();
  return rho;
}

double mass_inside_half_box(const WaveFunction& psi) {
  const GridSpec& g = psi.grid;
  const int A = g.axes();
  const int n = g.points_per_axis;
  const auto x = g.x_axis();
  std::vector<char> inside(n);
  for (int i = 0; i < n; ++i) inside[i] = std::abs(x[i]) <= 0.5 * g.box_half_width;
  std::vector<int> idx(A, 0);
  double in = 0.0, total = 0.0;
  for (std::size_t lin = 0; lin < psi.values.size(); ++lin) {
    const double w = std::norm(psi.values[lin]);
    total += w;
    bool ok = true;
    for (int a = 0; a < A && ok; ++a) ok = inside[idx[a]];
    if (ok) in += w;
    for (int a = A - 1; a >= 0; --a) {
      if (++idx[a] < n) break;
      idx[a] = 0;
    }
  }
  return total > 0.0 ? in / total : 0.0;
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.matrix.rows() != b.matrix.rows()) throw std::invalid_argument("trace_distance: size mismatch");
  Eigen::MatrixXcd D = a.matrix - b.matrix;
  D = 0.5 * (D + D.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(D, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

}  // namespace quantum
}  // namespace mflab
