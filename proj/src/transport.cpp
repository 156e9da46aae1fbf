#include "mflab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mflab/errors.hpp"
#include "mflab/rng.hpp"

namespace mflab {

DiscreteMeasure DiscreteMeasure::uniform(Eigen::MatrixXd pts) {
  DiscreteMeasure m;
  const auto n = pts.rows();
  if (n == 0) throw std::invalid_argument("uniform measure: empty point set");
  m.points = std::move(pts);
  m.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return m;
}

DiscreteMeasure DiscreteMeasure::dirac(const Eigen::VectorXd& point) {
  DiscreteMeasure m;
  m.points = point.transpose();
  m.weights = Eigen::VectorXd::Ones(1);
  return m;
}

void DiscreteMeasure::validate(double tol) const {
  if (points.rows() == 0) throw std::invalid_argument("discrete measure: empty support");
  if (weights.size() != points.rows()) throw std::invalid_argument("discrete measure: weights/points size mismatch");
  if (!points.allFinite() || !weights.allFinite()) throw std::invalid_argument("discrete measure: non-finite entry");
  if ((weights.array() < 0.0).any()) throw std::invalid_argument("discrete measure: negative weight");
  if (std::abs(weights.sum() - 1.0) > tol) throw std::invalid_argument("discrete measure: weights do not sum to 1");
}

bool DiscreteMeasure::has_equal_weights() const {
  if (weights.size() == 0) return false;
  return weights.maxCoeff() == weights.minCoeff();
}

double TransportPlan::marginal_violation(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(mu.size());
  Eigen::VectorXd col = Eigen::VectorXd::Zero(nu.size());
  for (const auto& e : entries) {
    row(e.source) += e.mass;
    col(e.target) += e.mass;
  }
  return std::max((row - mu.weights).cwiseAbs().maxCoeff(), (col - nu.weights).cwiseAbs().maxCoeff());
}

namespace transport {

double ground_cost(const double* x, const double* y, int k, double p) {
  double s = 0.0;
  for (int a = 0; a < k; ++a) s += (x[a] - y[a]) * (x[a] - y[a]);
  if (p == 2.0) return s;
  return std::pow(std::sqrt(s), p);
}

Eigen::MatrixXd cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  if (mu.dim() != nu.dim()) throw std::invalid_argument("cost matrix: dimension mismatch");
  const int m = mu.size(), n = nu.size(), k = mu.dim();
  // Row-major copies so that each atom is contiguous.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> X = mu.points, Y = nu.points;
  Eigen::MatrixXd C(m, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) C(i, j) = ground_cost(X.row(i).data(), Y.row(j).data(), k, p);
  return C;
}

namespace {

void check_inputs(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("wasserstein: exponent p must be >= 1");
  if (mu.size() == 0 || nu.size() == 0) throw std::invalid_argument("wasserstein: empty support");
  if (mu.dim() != nu.dim()) throw std::invalid_argument("wasserstein: dimension mismatch");
  mu.validate();
  nu.validate();
  if (std::abs(mu.weights.sum() - nu.weights.sum()) > 1e-12)
    throw std::invalid_argument("wasserstein: weight sums differ");
}

double root_p(double cost, double p) {
  cost = std::max(cost, 0.0);
  if (p == 1.0) return cost;
  if (p == 2.0) return std::sqrt(cost);
  return std::pow(cost, 1.0 / p);
}

}  // namespace

ExactResult wasserstein_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  check_inputs(mu, nu, p);
  if (mu.size() > kMaxSupport || nu.size() > kMaxSupport)
    throw ResourceError("wasserstein_exact: support exceeds the " + std::to_string(kMaxSupport) + " atom cap");
  const Eigen::MatrixXd C = cost_matrix(mu, nu, p);
  ExactResult r;
  r.plan.p = p;
  if (mu.size() == nu.size() && mu.has_equal_weights() && nu.has_equal_weights() &&
      mu.weights(0) == nu.weights(0)) {
    const int n = mu.size();
    const Assignment as = solve_assignment(C);
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += C(i, as.row_to_col[i]);
    const double w = mu.weights(0);
    for (int i = 0; i < n; ++i) r.plan.entries.push_back({i, as.row_to_col[i], w});
    r.plan.cost_value = total / n;
    r.a = as.u;
    r.b = as.v;
  } else {
    const NetworkSimplexResult ns = solve_transport_lp(C, mu.weights, nu.weights);
    double total = 0.0;
    for (int i = 0; i < mu.size(); ++i) {
      for (int j = 0; j < nu.size(); ++j) {
        const double f = ns.flow(i, j);
        if (f > 0.0) {
          r.plan.entries.push_back({i, j, f});
          total += f * C(i, j);
        }
      }
    }
    r.plan.cost_value = total;
    r.a = ns.a;
    r.b = ns.b;
  }
  r.dist = root_p(r.plan.cost_value, p);
  return r;
}

SinkhornResult wasserstein_sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double reg,
                                    int max_iter, double tol) {
  check_inputs(mu, nu, p);
  if (!(reg > 0.0)) throw std::invalid_argument("sinkhorn: regularization must be positive");
  if (!(tol > 0.0) || max_iter < 1) throw std::invalid_argument("sinkhorn: invalid tolerance or iteration cap");
  // Atoms of zero mass carry no constraint; solve on the positive part.
  std::vector<int> I, J;
  for (int i = 0; i < mu.size(); ++i)
    if (mu.weights(i) > 0.0) I.push_back(i);
  for (int j = 0; j < nu.size(); ++j)
    if (nu.weights(j) > 0.0) J.push_back(j);
  const int m = static_cast<int>(I.size()), n = static_cast<int>(J.size());
  const Eigen::MatrixXd Cfull = cost_matrix(mu, nu, p);
  Eigen::MatrixXd C(m, n);
  Eigen::VectorXd a(m), b(n);
  for (int i = 0; i < m; ++i) a(i) = mu.weights(I[i]);
  for (int j = 0; j < n; ++j) b(j) = nu.weights(J[j]);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) C(i, j) = Cfull(I[i], J[j]);

  const Eigen::VectorXd loga = a.array().log(), logb = b.array().log();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(m), g = Eigen::VectorXd::Zero(n);
  auto lse_rows = [&](const Eigen::VectorXd& gg, Eigen::VectorXd& out) {
    for (int i = 0; i < m; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) mx = std::max(mx, (gg(j) - C(i, j)) / reg);
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += std::exp((gg(j) - C(i, j)) / reg - mx);
      out(i) = reg * (loga(i) - (mx + std::log(s)));
    }
  };
  auto lse_cols = [&](const Eigen::VectorXd& ff, Eigen::VectorXd& out) {
    for (int j = 0; j < n; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) mx = std::max(mx, (ff(i) - C(i, j)) / reg);
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += std::exp((ff(i) - C(i, j)) / reg - mx);
      out(j) = reg * (logb(j) - (mx + std::log(s)));
    }
  };
  auto plan_matrix = [&]() {
    Eigen::MatrixXd P(m, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < m; ++i) P(i, j) = std::exp((f(i) + g(j) - C(i, j)) / reg);
    return P;
  };

  SinkhornResult res;
  res.plan.p = p;
  Eigen::MatrixXd P;
  for (int it = 1; it <= max_iter; ++it) {
    lse_rows(g, f);
    lse_cols(f, g);
    res.iterations = it;
    if (it % 10 == 0 || it == max_iter) {
      P = plan_matrix();
      res.marginal_gap = (P.rowwise().sum() - a).lpNorm<1>();
      if (res.marginal_gap <= tol) {
        res.converged = true;
        break;
      }
    }
  }
  if (P.size() == 0) P = plan_matrix();
  res.marginal_gap = (P.rowwise().sum() - a).lpNorm<1>() + (P.colwise().sum().transpose() - b).lpNorm<1>();
  res.converged = res.marginal_gap <= tol;

  // Rounding onto the transport polytope (Altschuler, Weed and Rigollet).
  Eigen::VectorXd r = P.rowwise().sum();
  for (int i = 0; i < m; ++i)
    if (r(i) > a(i)) P.row(i) *= a(i) / r(i);
  Eigen::VectorXd c = P.colwise().sum().transpose();
  for (int j = 0; j < n; ++j)
    if (c(j) > b(j)) P.col(j) *= b(j) / c(j);
  const Eigen::VectorXd err_r = (a - P.rowwise().sum()).cwiseMax(0.0);
  const Eigen::VectorXd err_c = (b - P.colwise().sum().transpose()).cwiseMax(0.0);
  const double mass = err_r.sum();
  if (mass > 0.0) P += err_r * err_c.transpose() / mass;

  double cost = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      if (P(i, j) > 0.0) {
        res.plan.entries.push_back({I[i], J[j], P(i, j)});
        cost += P(i, j) * C(i, j);
      }
    }
  }
  res.plan.cost_value = cost;
  res.dist_reg = root_p(cost, p);
  return res;
}

double kantorovich_gap(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, const TransportPlan& plan,
                       const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != mu.size() || b.size() != nu.size())
    throw std::invalid_argument("kantorovich_gap: potentials must live on the supports");
  const Eigen::MatrixXd C = cost_matrix(mu, nu, p);
  for (int j = 0; j < nu.size(); ++j) {
    for (int i = 0; i < mu.size(); ++i) {
      if (a(i) + b(j) > C(i, j) + 1e-9 * (1.0 + std::abs(C(i, j))))
        throw std::invalid_argument("kantorovich_gap: dual pair violates a(x)+b(y) <= |x-y|^p");
    }
  }
  double primal = 0.0;
  for (const auto& e : plan.entries) primal += e.mass * C(e.source, e.target);
  const double dual = a.dot(mu.weights) + b.dot(nu.weights);
  return primal - dual;
}

SubsampleEstimate subsample_distance(const DiscreteMeasure& A, const DiscreteMeasure& B, double p, int m, int repeats,
                                     std::uint64_t seed) {
  if (m < 1 || m > A.size() || m > B.size())
    throw std::invalid_argument("subsample_distance: subsample size out of range");
  if (repeats < 1) throw std::invalid_argument("subsample_distance: need at least one repeat");
  if (!A.has_equal_weights() || !B.has_equal_weights())
    throw std::invalid_argument("subsample_distance: clouds must carry equal weights");
  std::vector<double> dist(repeats), dpow(repeats);
  for (int r = 0; r < repeats; ++r) {
    CounterRng rng(seed, static_cast<std::uint64_t>(r));
    auto draw = [&](const DiscreteMeasure& X) {
      std::vector<int> idx(X.size());
      std::iota(idx.begin(), idx.end(), 0);
      for (int i = 0; i < m; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(X.size() - i)));
        std::swap(idx[i], idx[j]);
      }
      Eigen::MatrixXd pts(m, X.dim());
      for (int i = 0; i < m; ++i) pts.row(i) = X.points.row(idx[i]);
      return DiscreteMeasure::uniform(std::move(pts));
    };
    const DiscreteMeasure sa = draw(A);
    const DiscreteMeasure sb = draw(B);
    const ExactResult er = wasserstein_exact(sa, sb, p);
    dist[r] = er.dist;
    dpow[r] = er.plan.cost_value;
  }
  auto stats = [&](const std::vector<double>& v, double& mean, double& se) {
    mean = std::accumulate(v.begin(), v.end(), 0.0) / repeats;
    if (repeats < 2) {
      se = 0.0;
      return;
    }
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / (repeats - 1) / repeats);
  };
  SubsampleEstimate est;
  est.repeats = repeats;
  stats(dist, est.mean, est.std_err);
  stats(dpow, est.mean_pow, est.std_err_pow);
  return est;
}

void write_measure_csv(const std::string& path, const DiscreteMeasure& mu,
                       const std::vector<std::string>& coordinate_names) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  out << "weight";
  for (int c = 0; c < mu.dim(); ++c) {
    out << ',' << (c < static_cast<int>(coordinate_names.size()) ? coordinate_names[c] : "c" + std::to_string(c));
  }
  out << '\n';
  for (int i = 0; i < mu.size(); ++i) {
    out << mu.weights(i);
    for (int c = 0; c < mu.dim(); ++c) out << ',' << mu.points(i, c);
    out << '\n';
  }
}

DiscreteMeasure read_measure_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("measure csv: ragged row in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().size() < 2) throw std::invalid_argument("measure csv: no atoms in " + path);
  DiscreteMeasure mu;
  const int m = static_cast<int>(rows.size()), k = static_cast<int>(rows.front().size()) - 1;
  mu.points.resize(m, k);
  mu.weights.resize(m);
  for (int i = 0; i < m; ++i) {
    mu.weights(i) = rows[i][0];
    for (int c = 0; c < k; ++c) mu.points(i, c) = rows[i][c + 1];
  }
  return mu;
}

void write_plan_csv(const std::string& path, const TransportPlan& plan) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  out << "source,target,mass\n";
  for (const auto& e : plan.entries) out << e.source << ',' << e.target << ',' << e.mass << '\n';
}

}  // namespace transport
}  // namespace mflab
