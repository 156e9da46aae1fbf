#include "mflab/classical.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mflab/errors.hpp"

namespace mflab {

void InitialData::sample(CounterRng& rng, double* out) const {
  for (int a = 0; a < d; ++a) {
    if (kind == Kind::Gaussian) {
      out[a] = x_mean + x_std * rng.normal();
    } else {
      out[a] = x_mean + rng.uniform(-x_half, x_half);
    }
  }
  for (int a = 0; a < d; ++a) {
    if (kind == Kind::Gaussian) {
      out[d + a] = xi_mean + xi_std * rng.normal();
    } else {
      out[d + a] = xi_mean + rng.uniform(-xi_half, xi_half);
    }
  }
}

namespace classical {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr int kTableNodes = 1024;
constexpr int kTableMinTargets = 2 * kTableNodes;

// Field -sum_m w_m grad V(t - y_m) at each target row, by direct summation.
RowMatrix direct_field(const Potential& V, const RowMatrix& targets, const RowMatrix& sources,
                       const Eigen::VectorXd& w) {
  const int K = static_cast<int>(targets.rows()), M = static_cast<int>(sources.rows());
  const int d = static_cast<int>(targets.cols());
  RowMatrix F = RowMatrix::Zero(K, d);
  if (V.is_zero()) return F;
  if (d == 1) {
    for (int k = 0; k < K; ++k) {
      const double x = targets(k, 0);
      double acc = 0.0;
      for (int m = 0; m < M; ++m) {
        const double z = x - sources(m, 0);
        acc += w(m) * V.grad_factor(z * z) * z;
      }
      F(k, 0) = -acc;
    }
    return F;
  }
  std::vector<double> z(d);
  for (int k = 0; k < K; ++k) {
    for (int m = 0; m < M; ++m) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) {
        z[a] = targets(k, a) - sources(m, a);
        s += z[a] * z[a];
      }
      const double f = w(m) * V.grad_factor(s);
      for (int a = 0; a < d; ++a) F(k, a) -= f * z[a];
    }
  }
  return F;
}

// d = 1: tabulate the field and its derivative on a uniform grid spanning the
// targets, then interpolate with cubic Hermite polynomials.
RowMatrix tabulated_field(const Potential& V, const RowMatrix& targets, const RowMatrix& sources,
                          const Eigen::VectorXd& w) {
  const int K = static_cast<int>(targets.rows()), M = static_cast<int>(sources.rows());
  const double lo = targets.col(0).minCoeff(), hi = targets.col(0).maxCoeff();
  if (!(hi - lo > 1e-12)) return direct_field(V, targets, sources, w);
  const int G = kTableNodes;
  const double h = (hi - lo) / (G - 1);
  std::vector<double> Fv(G), Dv(G);
  for (int g = 0; g < G; ++g) {
    const double x = lo + h * g;
    double f = 0.0, dd = 0.0;
    for (int m = 0; m < M; ++m) {
      const double z = x - sources(m, 0);
      f += w(m) * V.grad_factor(z * z) * z;
      dd += w(m) * V.second_derivative1(z);
    }
    Fv[g] = -f;
    Dv[g] = -dd;
  }
  RowMatrix F(K, 1);
  for (int k = 0; k < K; ++k) {
    const double t = (targets(k, 0) - lo) / h;
    int i = static_cast<int>(std::floor(t));
    i = std::clamp(i, 0, G - 2);
    const double s = t - i, s2 = s * s, s3 = s2 * s;
    F(k, 0) = (2 * s3 - 3 * s2 + 1) * Fv[i] + (s3 - 2 * s2 + s) * h * Dv[i] + (-2 * s3 + 3 * s2) * Fv[i + 1] +
              (s3 - s2) * h * Dv[i + 1];
  }
  return F;
}

RowMatrix field(const Potential& V, const RowMatrix& targets, const RowMatrix& sources, const Eigen::VectorXd& w) {
  if (targets.cols() == 1 && targets.rows() >= kTableMinTargets && !V.is_zero())
    return tabulated_field(V, targets, sources, w);
  return direct_field(V, targets, sources, w);
}

RowMatrix positions_of(const VlasovCloud& c) {
  const int d = c.d();
  return c.cloud.points.leftCols(d);
}

std::vector<int> position_order(const Eigen::MatrixXd& X) {
  std::vector<int> order(X.rows());
  std::iota(order.begin(), order.end(), 0);
  const int d = static_cast<int>(X.cols());
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    for (int c = 0; c < d; ++c) {
      if (X(a, c) < X(b, c)) return true;
      if (X(b, c) < X(a, c)) return false;
    }
    return false;
  });
  return order;
}

double norm_pow(const double* v, int d, double p) {
  double s = 0.0;
  for (int a = 0; a < d; ++a) s += v[a] * v[a];
  if (p == 2.0) return s;
  return std::pow(std::sqrt(s), p);
}

}  // namespace

Eigen::MatrixXd nbody_force(const Potential& V, const Eigen::MatrixXd& X) {
  const int N = static_cast<int>(X.rows()), d = static_cast<int>(X.cols());
  if (N < 1) throw std::invalid_argument("nbody_force: need at least one particle");
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(N, d);
  if (V.is_zero()) return F;
  const std::vector<int> order = position_order(X);
  if (d == 1) {
    std::vector<double> xs(N), fs(N, 0.0);
    for (int a = 0; a < N; ++a) xs[a] = X(order[a], 0);
    for (int a = 0; a < N; ++a) {
      const double xa = xs[a];
      double acc = fs[a];
      for (int b = a + 1; b < N; ++b) {
        const double z = xa - xs[b];
        const double g = V.grad_factor(z * z) * z;
        acc -= g;
        fs[b] += g;
      }
      fs[a] = acc;
    }
    for (int a = 0; a < N; ++a) F(order[a], 0) = fs[a] / N;
    return F;
  }
  RowMatrix xs(N, d), fs = RowMatrix::Zero(N, d);
  for (int a = 0; a < N; ++a) xs.row(a) = X.row(order[a]);
  std::vector<double> z(d);
  for (int a = 0; a < N; ++a) {
    for (int b = a + 1; b < N; ++b) {
      double s = 0.0;
      for (int c = 0; c < d; ++c) {
        z[c] = xs(a, c) - xs(b, c);
        s += z[c] * z[c];
      }
      const double f = V.grad_factor(s);
      for (int c = 0; c < d; ++c) {
        fs(a, c) -= f * z[c];
        fs(b, c) += f * z[c];
      }
    }
  }
  for (int a = 0; a < N; ++a) F.row(order[a]) = fs.row(a) / N;
  return F;
}

Eigen::VectorXd mean_field_force(const Potential& V, const Eigen::VectorXd& x, const VlasovCloud& cloud) {
  if (cloud.size() == 0) throw std::invalid_argument("mean_field_force: empty cloud");
  const int d = cloud.d();
  if (x.size() != d) throw std::invalid_argument("mean_field_force: dimension mismatch");
  RowMatrix t = x.transpose();
  const RowMatrix F = direct_field(V, t, positions_of(cloud), cloud.cloud.weights);
  return F.row(0).transpose();
}

Eigen::MatrixXd mean_field_force_many(const Potential& V, const Eigen::MatrixXd& targets, const VlasovCloud& cloud) {
  if (cloud.size() == 0) throw std::invalid_argument("mean_field_force: empty cloud");
  if (targets.cols() != cloud.d()) throw std::invalid_argument("mean_field_force: dimension mismatch");
  const RowMatrix t = targets;
  return field(V, t, positions_of(cloud), cloud.cloud.weights);
}

PhaseState verlet_step(const PhaseState& state, const ForceField& force, double dt) {
  if (!(dt != 0.0) || !std::isfinite(dt)) throw std::invalid_argument("verlet_step: dt must be finite and nonzero");
  PhaseState s = state;
  s.xi += 0.5 * dt * force(s.x);
  s.x += dt * s.xi;
  s.xi += 0.5 * dt * force(s.x);
  s.time += dt;
  return s;
}

double nbody_energy(const Potential& V, const PhaseState& s) {
  const int N = s.n(), d = s.d();
  double kin = 0.5 * s.xi.squaredNorm();
  double pot = 0.0;
  std::vector<double> z(d);
  for (int k = 0; k < N; ++k) {
    for (int l = 0; l < N; ++l) {
      for (int a = 0; a < d; ++a) z[a] = s.x(k, a) - s.x(l, a);
      pot += V.eval(z);
    }
  }
  return kin + pot / (2.0 * N);
}

VlasovCloud vlasov_advance(const VlasovCloud& cloud, const Potential& V, double dt, int n_steps) {
  if (!(dt > 0.0)) throw std::invalid_argument("vlasov_advance: dt must be positive");
  if (n_steps < 0) throw std::invalid_argument("vlasov_advance: negative step count");
  const int d = cloud.d();
  RowMatrix X = cloud.cloud.points.leftCols(d);
  RowMatrix P = cloud.cloud.points.rightCols(d);
  const Eigen::VectorXd& w = cloud.cloud.weights;
  RowMatrix F = field(V, X, X, w);
  for (int s = 0; s < n_steps; ++s) {
    P += 0.5 * dt * F;
    X += dt * P;
    F = field(V, X, X, w);
    P += 0.5 * dt * F;
  }
  VlasovCloud out = cloud;
  out.cloud.points.leftCols(d) = X;
  out.cloud.points.rightCols(d) = P;
  out.time = cloud.time + n_steps * dt;
  return out;
}

VlasovCloud sample_vlasov_cloud(const InitialData& f, int M, std::uint64_t seed, std::uint64_t stream) {
  if (M < 1) throw std::invalid_argument("sample_vlasov_cloud: need at least one particle");
  CounterRng rng(seed, stream);
  RowMatrix pts(M, 2 * f.d);
  for (int m = 0; m < M; ++m) f.sample(rng, pts.row(m).data());
  VlasovCloud c;
  c.cloud = DiscreteMeasure::uniform(Eigen::MatrixXd(pts));
  return c;
}

CoupledEnsemble make_diagonal_ensemble(const InitialData& f, int N, int M, int M_ref, std::uint64_t seed) {
  if (N < 1 || M < 1 || M_ref < 1) throw std::invalid_argument("make_diagonal_ensemble: sizes must be positive");
  CoupledEnsemble ens;
  ens.rng_seed = seed;
  ens.reference_cloud = sample_vlasov_cloud(f, M_ref, seed, 0);
  const int d = f.d;
  std::vector<double> buf(2 * d);
  ens.mean_field_side.reserve(M);
  for (int s = 0; s < M; ++s) {
    CounterRng rng(seed, static_cast<std::uint64_t>(s) + 1);
    PhaseState st;
    st.x.resize(N, d);
    st.xi.resize(N, d);
    for (int j = 0; j < N; ++j) {
      f.sample(rng, buf.data());
      for (int a = 0; a < d; ++a) {
        st.x(j, a) = buf[a];
        st.xi(j, a) = buf[d + a];
      }
    }
    ens.mean_field_side.push_back(st);
  }
  ens.nbody_side = ens.mean_field_side;
  return ens;
}

void coupled_advance(CoupledEnsemble& ens, const Potential& V, double dt, int n_steps) {
  if (!(dt > 0.0)) throw std::invalid_argument("coupled_advance: dt must be positive");
  const int M = ens.samples();
  if (M == 0 || static_cast<int>(ens.nbody_side.size()) != M)
    throw std::invalid_argument("coupled_advance: sides must be nonempty and of equal length");
  if (std::abs(ens.time() - ens.reference_cloud.time) > 0.5 * dt)
    throw InvalidState("coupled_advance: ensemble and reference cloud are not time-aligned");
  const int N = ens.mean_field_side.front().n();
  const int d = ens.reference_cloud.d();
  const int Mr = ens.reference_cloud.size();
  const Eigen::VectorXd& w = ens.reference_cloud.cloud.weights;

  // Stack reference particles first, then every mean-field slot of every sample.
  const int K = Mr + M * N;
  RowMatrix X(K, d), P(K, d);
  X.topRows(Mr) = ens.reference_cloud.cloud.points.leftCols(d);
  P.topRows(Mr) = ens.reference_cloud.cloud.points.rightCols(d);
  for (int s = 0; s < M; ++s) {
    const PhaseState& st = ens.mean_field_side[s];
    if (st.n() != N || ens.nbody_side[s].n() != N)
      throw std::invalid_argument("coupled_advance: all samples must have the same N");
    X.middleRows(Mr + s * N, N) = st.x;
    P.middleRows(Mr + s * N, N) = st.xi;
  }
  auto mf_force = [&](const RowMatrix& XX) {
    const RowMatrix src = XX.topRows(Mr);
    return field(V, XX, src, w);
  };
  RowMatrix F = mf_force(X);
  std::vector<Eigen::MatrixXd> Fn(M);
  for (int s = 0; s < M; ++s) Fn[s] = nbody_force(V, ens.nbody_side[s].x);

  for (int step = 0; step < n_steps; ++step) {
    P += 0.5 * dt * F;
    X += dt * P;
    F = mf_force(X);
    P += 0.5 * dt * F;
    for (int s = 0; s < M; ++s) {
      PhaseState& nb = ens.nbody_side[s];
      nb.xi += 0.5 * dt * Fn[s];
      nb.x += dt * nb.xi;
      Fn[s] = nbody_force(V, nb.x);
      nb.xi += 0.5 * dt * Fn[s];
    }
  }
  const double dt_total = n_steps * dt;
  ens.reference_cloud.cloud.points.leftCols(d) = X.topRows(Mr);
  ens.reference_cloud.cloud.points.rightCols(d) = P.topRows(Mr);
  ens.reference_cloud.time += dt_total;
  for (int s = 0; s < M; ++s) {
    ens.mean_field_side[s].x = X.middleRows(Mr + s * N, N);
    ens.mean_field_side[s].xi = P.middleRows(Mr + s * N, N);
    ens.mean_field_side[s].time += dt_total;
    ens.nbody_side[s].time += dt_total;
  }
}

namespace {

double sample_cost(const PhaseState& a, const PhaseState& b, double p, std::vector<double>& terms) {
  const int N = a.n(), d = a.d();
  terms.resize(N);
  std::vector<double> diff(d);
  for (int j = 0; j < N; ++j) {
    for (int c = 0; c < d; ++c) diff[c] = a.x(j, c) - b.x(j, c);
    double t = norm_pow(diff.data(), d, p);
    for (int c = 0; c < d; ++c) diff[c] = a.xi(j, c) - b.xi(j, c);
    t += norm_pow(diff.data(), d, p);
    terms[j] = t;
  }
  // Summing in sorted order makes the value independent of particle labels.
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s / N;
}

}  // namespace

Estimate dobrushin_estimate(const CoupledEnsemble& ens, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("dobrushin_functional: p must be >= 1");
  const int M = ens.samples();
  if (M == 0) throw std::invalid_argument("dobrushin_functional: empty ensemble");
  std::vector<double> vals(M), terms;
  for (int s = 0; s < M; ++s) vals[s] = sample_cost(ens.mean_field_side[s], ens.nbody_side[s], p, terms);
  Estimate e;
  e.mean = std::accumulate(vals.begin(), vals.end(), 0.0) / M;
  if (M > 1) {
    double ss = 0.0;
    for (double v : vals) ss += (v - e.mean) * (v - e.mean);
    e.std_err = std::sqrt(ss / (M - 1) / M);
  }
  return e;
}

double dobrushin_functional(const CoupledEnsemble& ens, double p) { return dobrushin_estimate(ens, p).mean; }

DiscreteMeasure marginal_cloud(const std::vector<PhaseState>& side, int n) {
  if (side.empty()) throw std::invalid_argument("marginal_cloud: empty side");
  const int N = side.front().n(), d = side.front().d();
  if (n < 1 || n > N) throw std::invalid_argument("marginal_cloud: n must satisfy 1 <= n <= N");
  const int M = static_cast<int>(side.size());
  Eigen::MatrixXd pts(M, 2 * d * n);
  for (int s = 0; s < M; ++s) {
    for (int j = 0; j < n; ++j) {
      for (int c = 0; c < d; ++c) {
        pts(s, j * d + c) = side[s].x(j, c);
        pts(s, n * d + j * d + c) = side[s].xi(j, c);
      }
    }
  }
  return DiscreteMeasure::uniform(std::move(pts));
}

Estimate moment_p_estimate(const VlasovCloud& cloud, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("moment_p: p must be >= 1");
  const int d = cloud.d(), M = cloud.size();
  std::vector<double> v(M);
  for (int m = 0; m < M; ++m) {
    const Eigen::VectorXd row = cloud.cloud.points.row(m).transpose();
    v[m] = norm_pow(row.data(), d, p) + norm_pow(row.data() + d, d, p);
  }
  Estimate e;
  for (int m = 0; m < M; ++m) e.mean += cloud.cloud.weights(m) * v[m];
  if (M > 1) {
    double ss = 0.0;
    for (int m = 0; m < M; ++m) ss += (v[m] - e.mean) * (v[m] - e.mean);
    e.std_err = std::sqrt(ss / (M - 1) / M);
  }
  return e;
}

double moment_p(const VlasovCloud& cloud, double p) { return moment_p_estimate(cloud, p).mean; }

void write_marginal_csv(const std::string& path, const DiscreteMeasure& cloud, int d, int n) {
  std::vector<std::string> names;
  for (int j = 0; j < n; ++j)
    for (int c = 0; c < d; ++c) names.push_back("x" + std::to_string(j + 1) + (d > 1 ? "_" + std::to_string(c) : ""));
  for (int j = 0; j < n; ++j)
    for (int c = 0; c < d; ++c)
      names.push_back("xi" + std::to_string(j + 1) + (d > 1 ? "_" + std::to_string(c) : ""));
  transport::write_measure_csv(path, cloud, names);
}

}  // namespace classical
}  // namespace mflab
