#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mflab/quantum.hpp"

namespace mflab::quantum {

double dobrushin_quantum_functional(const WaveFunction& Phi, double eps, int N) {
  const GridSpec& g = Phi.grid;
  const int A = g.axes();
  if (N < 1 || A != 2 * N) throw std::invalid_argument("dobrushin functional: state must have 2N axes");
  const int n = g.points_per_axis;
  const auto x = g.x_axis();
  const auto k = g.k_axis();

  auto weighted_sum = [&](const CVec& v, const std::vector<double>& axis, double& total) {
    std::vector<int> idx(A, 0);
    double s = 0.0;
    total = 0.0;
    for (std::size_t lin = 0; lin < v.size(); ++lin) {
      const double w = std::norm(v[lin]);
      if (w != 0.0) {
        double c = 0.0;
        for (int j = 0; j < N; ++j) {
          const double u = axis[idx[j]] - axis[idx[N + j]];
          c += u * u;
        }
        s += w * c;
        total += w;
      }
      for (int a = A - 1; a >= 0; --a) {
        if (++idx[a] < n) break;
        idx[a] = 0;
      }
    }
    return s;
  };

  double tx = 0.0, tk = 0.0;
  const double pos = weighted_sum(Phi.values, x, tx);
  CVec hat = Phi.values;
  fft_forward(hat.data(), std::vector<int>(A, n));
  const double mom = weighted_sum(hat, k, tk);
  return (pos / tx + eps * eps * mom / tk) / N;
}

double qp_cost_trace(const WaveFunction& Phi) {
  if (Phi.grid.axes() != 2) throw std::invalid_argument("qp_cost_trace: two-variable state expected");
  return dobrushin_quantum_functional(Phi, Phi.grid.epsilon, 1);
}

double qp_cost_trace(const DensityMatrix& R) {
  const GridSpec& g = R.grid;
  if (g.axes() != 2) throw std::invalid_argument("qp_cost_trace: two-variable density matrix expected");
  const int n = g.points_per_axis;
  const Eigen::Index size = static_cast<Eigen::Index>(n) * n;
  if (R.matrix.rows() != size) throw std::invalid_argument("qp_cost_trace: matrix does not match grid");
  check_memory(2 * static_cast<std::size_t>(size * size) * sizeof(cplx), "qp_cost_trace work space");
  const auto x = g.x_axis();
  const auto k = g.k_axis();
  double tr = 0.0, pos = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double w = R.matrix(a * n + b, a * n + b).real();
      tr += w;
      pos += w * (x[a] - x[b]) * (x[a] - x[b]);
    }
  // diag(F R F^dagger) with the unitary two-dimensional DFT.
  const std::vector<int> shape{n, n};
  const double s = 1.0 / n;
  CVec col(static_cast<std::size_t>(size));
  auto transform_columns = [&](Eigen::MatrixXcd& M) {
    for (Eigen::Index j = 0; j < size; ++j) {
      for (Eigen::Index i = 0; i < size; ++i) col[i] = M(i, j);
      fft_forward(col.data(), shape);
      for (Eigen::Index i = 0; i < size; ++i) M(i, j) = col[i] * s;
    }
  };
  Eigen::MatrixXcd T = R.matrix;
  transform_columns(T);
  T = T.adjoint().eval();
  transform_columns(T);
  double mom = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double w = T(a * n + b, a * n + b).real();
      mom += w * (k[a] - k[b]) * (k[a] - k[b]);
    }
  return (pos + g.epsilon * g.epsilon * mom) / tr;
}

double qp_cost_trace(const MixedCoupling& R) {
  if (R.weights.size() != R.states.size()) throw std::invalid_argument("mixed coupling: weights/states mismatch");
  double s = 0.0;
  for (std::size_t m = 0; m < R.states.size(); ++m) s += R.weights[m] * qp_cost_trace(R.states[m]);
  return s;
}

MixedCoupling toeplitz_coupling(const GridSpec& single, const SymbolMeasure& mu1, const SymbolMeasure& mu2,
                                const TransportPlan& plan) {
  if (mu1.points.cols() != 2 || mu2.points.cols() != 2)
    throw std::invalid_argument("toeplitz_coupling: symbols on R^2 expected");
  GridSpec g2 = single.single();
  g2.doubled = true;
  MixedCoupling R;
  for (const PlanEntry& e : plan.entries) {
    if (e.mass <= 0.0) continue;
    R.weights.push_back(e.mass);
    R.states.push_back(coherent_product(g2, {mu1.points(e.source, 0), mu2.points(e.target, 0)},
                                        {mu1.points(e.source, 1), mu2.points(e.target, 1)}));
  }
  return R;
}

double mk_eps_upper(const SymbolMeasure& mu1, const SymbolMeasure& mu2, double eps, int d) {
  const auto res = transport::wasserstein_exact(mu1, mu2, 2.0);
  return res.dist * res.dist + 2.0 * d * eps;
}

LowerBracket mk_eps_lower(const DensityMatrix& rho1, const DensityMatrix& rho2, const HusimiLattice& lattice) {
  if (rho1.grid.epsilon != rho2.grid.epsilon) throw std::invalid_argument("mk_eps_lower: epsilon mismatch");
  const DiscreteMeasure h1 = husimi_cloud(rho1, lattice);
  const DiscreteMeasure h2 = husimi_cloud(rho2, lattice);
  const auto res = transport::wasserstein_exact(h1, h2, 2.0);
  LowerBracket out;
  out.husimi_w2_sq = res.dist * res.dist;
  out.value = out.husimi_w2_sq - 2.0 * rho1.grid.d * rho1.grid.epsilon;
  return out;
}

SymbolMeasure symmetrize_initial_coupling(const TransportPlan& plan, const SymbolMeasure& source,
                                          const SymbolMeasure& target, int N) {
  if (N < 1 || N > 6) throw std::invalid_argument("symmetrization needs 1 <= N <= 6");
  const Eigen::Index dim = source.points.cols();
  if (dim != target.points.cols() || dim % N != 0)
    throw std::invalid_argument("symbol dimensions incompatible with N particles");
  const Eigen::Index block = dim / N;
  std::vector<int> perm(N);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> perms;
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<std::pair<std::vector<double>, double>> atoms;
  for (const PlanEntry& e : plan.entries) {
    if (e.mass <= 0.0) continue;
    const double w = e.mass / static_cast<double>(perms.size());
    for (const auto& sigma : perms) {
      std::vector<double> row(2 * dim);
      for (int j = 0; j < N; ++j)
        for (Eigen::Index c = 0; c < block; ++c) {
          row[j * block + c] = source.points(e.source, sigma[j] * block + c);
          row[dim + j * block + c] = target.points(e.target, sigma[j] * block + c);
        }
      atoms.emplace_back(std::move(row), w);
    }
  }
  std::sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<std::vector<double>, double>> merged;
  for (auto& a : atoms) {
    if (!merged.empty() && merged.back().first == a.first) merged.back().second += a.second;
    else merged.push_back(std::move(a));
  }
  SymbolMeasure out;
  out.points.resize(static_cast<Eigen::Index>(merged.size()), 2 * dim);
  out.weights.resize(static_cast<Eigen::Index>(merged.size()));
  for (std::size_t m = 0; m < merged.size(); ++m) {
    for (Eigen::Index c = 0; c < 2 * dim; ++c) out.points(m, c) = merged[m].first[c];
    out.weights(m) = merged[m].second;
  }
  return out;
}

double symbol_coupling_cost(const SymbolMeasure& coupling, int N) {
  const Eigen::Index dim = coupling.points.cols() / 2;
  if (coupling.points.cols() != 2 * dim || dim != 2 * N)
    throw std::invalid_argument("coupling symbol must live on R^{4N}");
  double s = 0.0;
  for (Eigen::Index m = 0; m < coupling.points.rows(); ++m) {
    const auto a = coupling.points.row(m).head(dim);
    const auto b = coupling.points.row(m).tail(dim);
    s += coupling.weights(m) * (a - b).squaredNorm() / N;
  }
  return s;
}

WaveFunction lift_coupling_atom(const GridSpec& doubled, const Eigen::VectorXd& atom) {
  const int N = doubled.n_particles;
  if (!doubled.doubled || atom.size() != 4 * N)
    throw std::invalid_argument("lift_coupling_atom: doubled grid and 4N-dimensional atom expected");
  std::vector<double> q(2 * N), p(2 * N);
  for (int a = 0; a < 2 * N; ++a) {
    q[a] = atom(2 * a);
    p[a] = atom(2 * a + 1);
  }
  return coherent_product(doubled, q, p);
}

}  // namespace mflab::quantum
