#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

#include "mflab/classical.hpp"
#include "mflab/errors.hpp"
#include "mflab/experiment.hpp"
#include "mflab/quantum.hpp"

namespace mflab {

namespace {

using Constants = std::map<std::string, double>;
constexpr double kPi = std::numbers::pi;

class Logger {
 public:
  void open(const std::string& path) { out_.open(path); }
  void line(const std::string& msg) {
    std::lock_guard<std::mutex> lock(mu_);
    if (!out_) return;
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    out_ << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << msg << '\n';
    out_.flush();
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

struct JobOutput {
  std::vector<BoundReport> reports;
  bool guard_tripped = false;
  bool errored = false;
};

using Job = std::function<JobOutput(Logger&)>;

struct Plan {
  std::vector<std::string> labels;
  std::vector<Job> jobs;
  // Rows derived from all job outputs (for example fitted slopes).
  std::function<std::vector<BoundReport>(const std::vector<JobOutput>&)> finalize;
};

int steps_between(double t0, double t1, double dt) { return static_cast<int>(std::lround((t1 - t0) / dt)); }

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = std::log(x[i]) - mx;
    sxy += u * (std::log(y[i]) - my);
    sxx += u * u;
  }
  return sxy / sxx;
}

Constants potential_constants(const Potential& V) {
  return {{"sup_grad", V.sup_grad()}, {"lip_grad", V.lip_grad()}, {"d", static_cast<double>(V.dim())}};
}

// ---------------------------------------------------------------- ot-selftest

Plan plan_ot_selftest(const ExperimentConfig& c) {
  Plan plan;
  for (int inst = 0; inst < c.instances; ++inst) {
    plan.labels.push_back("instance " + std::to_string(inst));
    plan.jobs.push_back([c, inst](Logger&) {
      JobOutput out;
      CounterRng rng(c.seed, static_cast<std::uint64_t>(inst));
      const int k = inst % 2 == 0 ? 2 : 4;
      const int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(c.max_cloud)));
      Eigen::MatrixXd a(m, k), b(m, k);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) a(i, j) = rng.normal();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) b(i, j) = rng.normal();
      const DiscreteMeasure A = DiscreteMeasure::uniform(a), B = DiscreteMeasure::uniform(b);
      const Eigen::MatrixXd C = transport::cost_matrix(A, B, c.p);

      std::vector<int> perm(m);
      std::iota(perm.begin(), perm.end(), 0);
      double best = std::numeric_limits<double>::infinity();
      do {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += C(i, perm[i]);
        best = std::min(best, s);
      } while (std::next_permutation(perm.begin(), perm.end()));
      best /= m;

      const auto res = transport::wasserstein_exact(A, B, c.p);
      const Constants cs{{"k", double(k)}, {"m", double(m)}, {"p", c.p}, {"instance", double(inst)}};
      out.reports.push_back(
          BoundReport::make("ot.exact_vs_permutation", 0.0, std::abs(res.plan.cost_value - best), 0.0, 0.0, 0.0, cs));
      const double gap = transport::kantorovich_gap(A, B, c.p, res.plan, res.a, res.b);
      out.reports.push_back(BoundReport::make("ot.duality_gap", 0.0, std::abs(gap), 0.0, 0.0, 1e-9, cs));
      const auto lp = transport::solve_transport_lp(C, A.weights, B.weights);
      out.reports.push_back(BoundReport::make("ot.network_simplex_vs_permutation", 0.0, std::abs(lp.cost - best), 0.0,
                                              0.0, 1e-12 * (1.0 + best), cs));

      // Same supports with random unequal weights: exercises the network simplex path.
      DiscreteMeasure Aw = A, Bw = B;
      for (int i = 0; i < m; ++i) Aw.weights(i) = 0.1 + rng.uniform();
      for (int i = 0; i < m; ++i) Bw.weights(i) = 0.1 + rng.uniform();
      Aw.weights /= Aw.weights.sum();
      Bw.weights /= Bw.weights.sum();
      const auto rw = transport::wasserstein_exact(Aw, Bw, c.p);
      out.reports.push_back(BoundReport::make("ot.weighted_marginals", 0.0, rw.plan.marginal_violation(Aw, Bw), 0.0,
                                              0.0, 1e-12, cs));
      out.reports.push_back(BoundReport::make(
          "ot.weighted_duality_gap", 0.0, std::abs(transport::kantorovich_gap(Aw, Bw, c.p, rw.plan, rw.a, rw.b)), 0.0,
          0.0, 1e-9, cs));
      return out;
    });
  }
  return plan;
}

// ------------------------------------------------------------------- combineq

Plan plan_combineq(const ExperimentConfig& c) {
  Plan plan;
  const Potential V = c.potential.build(1);
  for (int N : c.N) {
    plan.labels.push_back("N = " + std::to_string(N));
    plan.jobs.push_back([c, V, N](Logger&) {
      JobOutput out;
      const auto rho = bounds::Density1D::gaussian(0.0, 1.0);
      const std::uint64_t seed = c.seed * 1000003ULL + static_cast<std::uint64_t>(N);
      const auto est = bounds::combineq_mc(V, rho, c.p, N, c.mc_samples, seed);
      const bool even = std::abs(c.p / 2.0 - std::round(c.p / 2.0)) < 1e-12;
      const double rhs = even ? bounds::combineq_rhs_even(V.sup_grad(), c.p, N) : bounds::combineq_rhs(V.sup_grad(), c.p, N);
      Constants cs{{"F_sup", V.sup_grad()}, {"p", c.p}, {"N", double(N)}, {"samples", double(est.samples)}};
      out.reports.push_back(BoundReport::make("combineq.ineq1", 0.0, est.mean, est.std_err, rhs, 0.0, cs));
      return out;
    });
  }
  if (c.counting) {
    plan.labels.push_back("counting");
    plan.jobs.push_back([](Logger&) {
      JobOutput out;
      for (int p : {2, 4})
        for (int N = 1; N <= 5; ++N) {
          const double closed = static_cast<double>(bounds::count_S_Np(N, p));
          const double enumerated = static_cast<double>(bounds::count_S_Np_enumerated(N, p));
          out.reports.push_back(BoundReport::make("combineq.count_S_Np", 0.0, std::abs(closed - enumerated), 0.0, 0.0,
                                                  0.0,
                                                  {{"N", double(N)}, {"p", double(p)}, {"closed_form", closed},
                                                   {"enumerated", enumerated}}));
        }
      return out;
    });
  }
  plan.finalize = [](const std::vector<JobOutput>& outs) {
    std::vector<double> Ns, vals;
    for (const auto& o : outs)
      for (const auto& r : o.reports)
        if (r.inequality_id == "combineq.ineq1" && r.lhs_measured > 0.0) {
          Ns.push_back(r.constants.at("N"));
          vals.push_back(r.lhs_measured);
        }
    std::vector<BoundReport> rows;
    if (Ns.size() >= 2) {
      const double s = loglog_slope(Ns, vals);
      rows.push_back(BoundReport::make("combineq.n_slope", 0.0, std::abs(s + 1.0), 0.0, 0.0, 0.15,
                                       {{"slope", s}, {"expected", -1.0}}));
    }
    return rows;
  };
  return plan;
}

// -------------------------------------------------------- classical-dobrushin

Plan plan_classical(const ExperimentConfig& c) {
  Plan plan;
  const Potential V = c.potential.build(1);
  for (int N : c.N) {
    plan.labels.push_back("N = " + std::to_string(N));
    plan.jobs.push_back([c, V, N](Logger& log) {
      JobOutput out;
      const InitialData f = InitialData::standard_normal(1);
      CoupledEnsemble ens = classical::make_diagonal_ensemble(f, N, c.coupled_samples, c.reference_samples, c.seed);
      double now = 0.0;
      const double Lp = bounds::Lambda_p(c.p, V.lip_grad());
      for (double t : c.times()) {
        classical::coupled_advance(ens, V, c.dt, steps_between(now, t, c.dt));
        now = t;
        Constants cs = potential_constants(V);
        cs.insert({{"N", double(N)}, {"n", double(c.n)}, {"p", c.p}, {"K_p", bounds::K_p(c.p)}, {"Lambda_p", Lp},
                   {"dt", c.dt}, {"samples", double(c.coupled_samples)}});

        const auto D = classical::dobrushin_estimate(ens, c.p);
        if (c.p == 2.0) {
          Constants cg = cs;
          cg["Lambda_2"] = Lp;
          out.reports.push_back(BoundReport::make("thm3.1.gronwall_D2", t, D.mean, D.std_err,
                                                  bounds::classical_gronwall_rhs(V.sup_grad(), V.lip_grad(), N, t),
                                                  0.0, cg));
        }

        // Law of f(t)^{otimes n} from the reference cloud, grouped n at a time.
        const DiscreteMeasure& ref = ens.reference_cloud.cloud;
        const int groups = ref.size() / c.n;
        Eigen::MatrixXd rp(groups, 2 * c.n);
        for (int g = 0; g < groups; ++g)
          for (int j = 0; j < c.n; ++j) {
            rp(g, j) = ref.points(g * c.n + j, 0);
            rp(g, c.n + j) = ref.points(g * c.n + j, 1);
          }
        const DiscreteMeasure A = DiscreteMeasure::uniform(rp);
        const DiscreteMeasure B = classical::marginal_cloud(ens.nbody_side, c.n);
        const DiscreteMeasure Cm = classical::marginal_cloud(ens.mean_field_side, c.n);
        const int m = std::min({c.subsample_size, A.size(), B.size()});
        const std::uint64_t wseed = c.seed * 7919ULL + static_cast<std::uint64_t>(std::lround(t * 1e6));
        const auto nb = transport::subsample_distance(A, B, c.p, m, c.subsample_repeats, wseed);
        const auto mf = transport::subsample_distance(A, Cm, c.p, m, c.subsample_repeats, wseed);
        const double corrected = nb.mean_pow - mf.mean_pow;
        const double se = std::hypot(nb.std_err_pow, mf.std_err_pow);
        Constants cw = cs;
        cw["w_pow_nbody"] = nb.mean_pow;
        cw["w_pow_baseline"] = mf.mean_pow;
        cw["w_pow_unnormalized"] = corrected;
        cw["subsample_size"] = m;
        cw["D_pow"] = D.mean;
        out.reports.push_back(BoundReport::make("thm3.1.wasserstein", t, corrected / c.n, se / c.n,
                                                bounds::classical_rhs(V, c.p, N, c.n, t), 0.0, cw));
        std::ostringstream os;
        os << "classical N=" << N << " t=" << t << " D=" << D.mean << " +- " << D.std_err << " W_corr=" << corrected;
        log.line(os.str());
      }
      return out;
    });
  }
  plan.finalize = [c](const std::vector<JobOutput>& outs) {
    std::vector<BoundReport> rows;
    if (c.p != 2.0) return rows;
    for (double t : c.times()) {
      if (t <= 0.0) continue;
      std::vector<double> Ns, dist, wc;
      bool wc_ok = true;
      for (const auto& o : outs)
        for (const auto& r : o.reports)
          if (r.inequality_id == "thm3.1.gronwall_D2" && r.time == t && r.lhs_measured > 0.0) {
            Ns.push_back(r.constants.at("N"));
            dist.push_back(std::sqrt(r.lhs_measured));
          }
      for (const auto& o : outs)
        for (const auto& r : o.reports)
          if (r.inequality_id == "thm3.1.wasserstein" && r.time == t) {
            if (r.lhs_measured > 0.0) wc.push_back(std::sqrt(r.lhs_measured));
            else wc_ok = false;
          }
      if (Ns.size() < 2) continue;
      const double s = loglog_slope(Ns, dist);
      const double s_sub = wc_ok && wc.size() == Ns.size() ? loglog_slope(Ns, wc) : std::nan("");
      rows.push_back(BoundReport::make("thm3.1.n_slope", t, std::abs(s + 0.5), 0.0, 0.0, 0.15,
                                       {{"slope", s}, {"expected", -0.5}, {"slope_subsample_corrected", s_sub}}));
    }
    return rows;
  };
  return plan;
}

// ------------------------------------------------------------- vlasov-moments

Plan plan_vlasov(const ExperimentConfig& c) {
  Plan plan;
  const Potential V = c.potential.build(1);
  plan.labels.push_back("cloud");
  plan.jobs.push_back([c, V](Logger& log) {
    JobOutput out;
    VlasovCloud cloud = classical::sample_vlasov_cloud(InitialData::standard_normal(1), c.particles, c.seed, 0);
    const auto m0 = classical::moment_p_estimate(cloud, c.p);
    const double sigma = m0.std_err / m0.mean;
    double now = 0.0;
    for (double t : c.times()) {
      cloud = classical::vlasov_advance(cloud, V, c.dt, steps_between(now, t, c.dt));
      now = t;
      const double Mt = classical::moment_p(cloud, c.p);
      const double rhs = bounds::moment_rhs(m0.mean, c.p, V.lip_grad(), t) * (1.0 + 3.0 * sigma);
      Constants cs = potential_constants(V);
      cs.insert({{"M0", m0.mean}, {"sigma_mc", sigma}, {"p", c.p}, {"particles", double(c.particles)}});
      out.reports.push_back(BoundReport::make("rem3.3.moment", t, Mt, 0.0, rhs, 0.0, cs));
      log.line("vlasov t=" + std::to_string(t) + " M=" + std::to_string(Mt));
    }
    return out;
  });
  return plan;
}

// -------------------------------------------------------- toeplitz-identities

GridSpec single_grid(const ExperimentConfig& c, double eps) {
  GridSpec g;
  g.points_per_axis = c.points_per_axis;
  g.box_half_width = c.box_half_width;
  g.epsilon = eps;
  g.validate();
  return g;
}

Plan plan_toeplitz(const ExperimentConfig& c) {
  Plan plan;
  const double eps = c.epsilon.front();
  plan.labels.push_back("wigner");
  plan.jobs.push_back([c, eps](Logger&) {
    JobOutput out;
    const GridSpec g = single_grid(c, eps);
    const double q = 0.3, p = 0.4;
    const auto W = quantum::wigner_transform(DensityMatrix::pure(quantum::coherent_state(g, q, p)));
    double err = 0.0;
    for (std::size_t i = 0; i < W.x.size(); ++i)
      for (std::size_t k = 0; k < W.xi.size(); ++k) {
        const double u = W.x[i] - q, v = W.xi[k] - p;
        const double exact = std::exp(-(u * u + v * v) / eps) / (kPi * eps);
        err = std::max(err, std::abs(W.values(i, k) - exact));
      }
    const Constants cs{{"eps", eps}, {"points", double(g.points_per_axis)}, {"q", q}, {"p", p}};
    out.reports.push_back(BoundReport::make("toep.wigner_coherent", 0.0, err, 0.0, 0.0, 1e-6, cs));
    out.reports.push_back(BoundReport::make("toep.wigner_normalization", 0.0, std::abs(W.integral() - 1.0), 0.0, 0.0,
                                            1e-6, cs));
    return out;
  });
  plan.labels.push_back("trace identity");
  plan.jobs.push_back([c, eps](Logger&) {
    JobOutput out;
    const GridSpec g = single_grid(c, eps);
    for (int inst = 0; inst < c.instances; ++inst) {
      CounterRng rng(c.seed, 100 + static_cast<std::uint64_t>(inst));
      // State: mixture of two superpositions of coherent states.
      DensityMatrix rho;
      rho.grid = g;
      rho.matrix = Eigen::MatrixXcd::Zero(g.points_per_axis, g.points_per_axis);
      for (int a = 0; a < 2; ++a) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(g.points_per_axis);
        for (int b = 0; b < 3; ++b)
          v += cplx(rng.normal(), rng.normal()) *
               quantum::coherent_vector(g, rng.uniform(-2.5, 2.5), rng.uniform(-1.5, 1.5));
        v.normalize();
        rho.matrix += (a == 0 ? 0.3 : 0.7) * v * v.adjoint();
      }
      const int atoms = 1 + static_cast<int>(rng.below(5));
      SymbolMeasure mu;
      mu.points.resize(atoms, 2);
      mu.weights.resize(atoms);
      for (int m = 0; m < atoms; ++m) {
        mu.points(m, 0) = rng.uniform(-3.0, 3.0);
        mu.points(m, 1) = rng.uniform(-2.0, 2.0);
        mu.weights(m) = 0.1 + rng.uniform();
      }
      mu.weights /= mu.weights.sum();
      const double lhs = (quantum::toeplitz_operator(g, mu).matrix * rho.matrix).trace().real();
      double rhs = 0.0;
      for (int m = 0; m < atoms; ++m)
        rhs += mu.weights(m) * 2.0 * kPi * eps *
               quantum::husimi_transform(rho, {mu.points(m, 0)}, {mu.points(m, 1)}).values(0, 0);
      out.reports.push_back(BoundReport::make("toep.trace_identity", 0.0, std::abs(lhs - rhs) / std::abs(rhs), 0.0,
                                              0.0, 1e-6,
                                              {{"eps", eps}, {"atoms", double(atoms)}, {"instance", double(inst)},
                                               {"trace_toeplitz", lhs}, {"husimi_sum", rhs}}));
    }
    return out;
  });
  plan.labels.push_back("quadratic symbol");
  plan.jobs.push_back([c, eps](Logger&) {
    JobOutput out;
    const GridSpec g = single_grid(c, eps);
    const double q0 = 0.7, p0 = 0.2;
    const DensityMatrix rho = DensityMatrix::pure(quantum::coherent_state(g, q0, p0));
    // Symbol q^2 dq dp / (2 pi eps) on a fine lattice around the state.
    const int K = 241;
    const double half = 12.0 * std::sqrt(eps), h = 2.0 * half / (K - 1);
    std::vector<double> qs(K), ps(K);
    for (int i = 0; i < K; ++i) {
      qs[i] = q0 - half + i * h;
      ps[i] = p0 - half + i * h;
    }
    const auto H = quantum::husimi_transform(rho, qs, ps);  // <z|rho|z> / (2 pi eps)
    double expectation = 0.0;
    for (int i = 0; i < K; ++i)
      for (int k = 0; k < K; ++k) expectation += qs[i] * qs[i] * H.values(i, k) * h * h;
    const auto x = g.x_axis();
    double x2 = 0.0;
    for (int i = 0; i < g.points_per_axis; ++i) x2 += x[i] * x[i] * rho.matrix(i, i).real();
    const Constants cs{{"eps", eps}, {"q0", q0}, {"p0", p0}, {"expectation", expectation}, {"trace_x2", x2}};
    out.reports.push_back(
        BoundReport::make("toep.quadratic_literal", 0.0, std::abs(expectation - (q0 * q0 + eps / 2.0)), 0.0, 0.0, 1e-4, cs));
    out.reports.push_back(
        BoundReport::make("toep.quadratic_identity", 0.0, std::abs(expectation - (x2 + eps / 2.0)), 0.0, 0.0, 1e-4, cs));
    return out;
  });
  return plan;
}

// ------------------------------------------------------------------ mk-bracket

Plan plan_mk_bracket(const ExperimentConfig& c) {
  Plan plan;
  for (int inst = 0; inst < c.instances; ++inst) {
    const double eps = c.epsilon[static_cast<std::size_t>(inst) % c.epsilon.size()];
    plan.labels.push_back("instance " + std::to_string(inst));
    plan.jobs.push_back([c, inst, eps](Logger&) {
      JobOutput out;
      CounterRng rng(c.seed, static_cast<std::uint64_t>(inst));
      const double q1 = rng.uniform(-2.0, 2.0), p1 = rng.uniform(-1.5, 1.5);
      const double q2 = rng.uniform(-2.0, 2.0), p2 = rng.uniform(-1.5, 1.5);
      const GridSpec g = single_grid(c, eps);
      GridSpec g2 = g;
      g2.doubled = true;
      const double qp = quantum::qp_cost_trace(quantum::coherent_product(g2, {q1, q2}, {p1, p2}));
      const double target = (q1 - q2) * (q1 - q2) + (p1 - p2) * (p1 - p2) + 2.0 * eps;
      quantum::HusimiLattice lat;
      lat.points = c.husimi_points;
      const auto lower = quantum::mk_eps_lower(DensityMatrix::pure(quantum::coherent_state(g, q1, p1)),
                                               DensityMatrix::pure(quantum::coherent_state(g, q2, p2)), lat);
      const Constants cs{{"eps", eps}, {"d", 1.0}, {"q1", q1}, {"p1", p1}, {"q2", q2}, {"p2", p2},
                         {"qp_cost", qp}, {"target", target}};
      out.reports.push_back(
          BoundReport::make("thm2.3.product_coupling", 0.0, std::abs(qp - target) / target, 0.0, 0.0, 1e-3, cs));
      out.reports.push_back(BoundReport::make("thm2.3.lower_bound", 0.0, lower.value, 0.0, qp, 1e-3, cs));
      out.reports.push_back(BoundReport::make("thm2.3.cost_floor", 0.0, 2.0 * eps, 0.0, qp, 1e-6, cs));
      return out;
    });
  }
  return plan;
}

// ---------------------------------------------------------- quantum-dobrushin

std::string label_of(double eps, int N) {
  std::ostringstream os;
  os << "quantum eps=" << eps << " N=" << N;
  return os.str();
}

Plan plan_quantum(const ExperimentConfig& c) {
  Plan plan;
  const Potential V = c.potential.build(1);
  for (int N : c.N)
    for (double eps : c.epsilon) {
      std::ostringstream label;
      label << "eps = " << eps << ", N = " << N;
      plan.labels.push_back(label.str());
      plan.jobs.push_back([c, V, N, eps](Logger& log) {
        JobOutput out;
        GridSpec g;
        g.n_particles = N;
        g.points_per_axis = c.points_per_axis;
        g.box_half_width = c.box_half_width;
        g.epsilon = eps;
        g.doubled = true;
        g.validate();

        // Diagonal coupling of the product data (z0, ..., z0), symmetrized over S_N.
        Eigen::VectorXd atom(2 * N);
        for (int j = 0; j < N; ++j) {
          atom(2 * j) = c.center_q;
          atom(2 * j + 1) = c.center_p;
        }
        const SymbolMeasure src = DiscreteMeasure::dirac(atom);
        TransportPlan diag;
        diag.entries.push_back({0, 0, 1.0});
        const SymbolMeasure coupling = quantum::symmetrize_initial_coupling(diag, src, src, N);
        std::vector<WaveFunction> states;
        std::vector<double> weights;
        for (Eigen::Index m = 0; m < coupling.points.rows(); ++m) {
          states.push_back(quantum::lift_coupling_atom(g, coupling.points.row(m).transpose()));
          weights.push_back(coupling.weights(m));
        }
        WaveFunction hartree = quantum::coherent_state(g.single(), c.center_q, c.center_p);
        const quantum::CoupledPropagator prop(g, V, c.dt);
        std::vector<double> norm0;
        for (const auto& s : states) norm0.push_back(s.norm());
        const double hnorm0 = hartree.norm();

        const double Lam = bounds::Lambda_quantum(V.lip_grad());
        quantum::HusimiLattice lat;
        lat.points = c.husimi_points;
        double now = 0.0;
        for (double t : c.times()) {
          const int steps = steps_between(now, t, c.dt);
          for (int s = 0; s < steps; ++s) {
            for (std::size_t m = 0; m < states.size(); ++m) {
              WaveFunction h = hartree;  // each component sees the same reference field
              prop.step(states[m], h);
              if (m + 1 == states.size()) hartree = std::move(h);
            }
          }
          now = t;

          // Guards: unitarity and mass inside the inner half of the box.
          double drift = std::abs(hartree.norm() - hnorm0);
          double inside = quantum::mass_inside_half_box(hartree);
          for (std::size_t m = 0; m < states.size(); ++m) {
            drift = std::max(drift, std::abs(states[m].norm() - norm0[m]));
            inside = std::min(inside, quantum::mass_inside_half_box(states[m]));
          }
          if (drift > 1e-10 || inside < 1.0 - 1e-10) {
            std::ostringstream why;
            why << "guard tripped: norm drift " << drift << ", mass inside half box " << inside;
            out.reports.push_back(BoundReport::failure("thm2.4.guard", t, why.str()));
            out.guard_tripped = true;
            log.line(label_of(eps, N) + " " + why.str());
            return out;
          }

          double D = 0.0;
          DensityMatrix rx, ry;
          for (std::size_t m = 0; m < states.size(); ++m) {
            D += weights[m] * quantum::dobrushin_quantum_functional(states[m], eps, N);
            DensityMatrix ax = quantum::axis_marginal(states[m], 0);
            DensityMatrix ay = quantum::axis_marginal(states[m], N);
            if (m == 0) {
              rx = ax;
              ry = ay;
              rx.matrix *= weights[m];
              ry.matrix *= weights[m];
            } else {
              rx.matrix += weights[m] * ax.matrix;
              ry.matrix += weights[m] * ay.matrix;
            }
          }
          const auto lower = quantum::mk_eps_lower(rx, ry, lat);
          const double rhs = bounds::quantum_rhs(bounds::QuantumVariant::Factorized, V, eps, N, 1, t, 0.0);
          Constants cs = potential_constants(V);
          cs.insert({{"eps", eps}, {"N", double(N)}, {"n", 1.0}, {"Lambda", Lam}, {"dt", c.dt},
                     {"points_per_axis", double(c.points_per_axis)}, {"box_half_width", c.box_half_width},
                     {"norm_drift", drift}, {"mass_inside_half_box", inside}});
          out.reports.push_back(BoundReport::make("thm2.4.dobrushin", t, D, 0.0, rhs, 1e-2 * rhs, cs));
          Constants cl = cs;
          cl["husimi_w2_sq"] = lower.husimi_w2_sq;
          out.reports.push_back(BoundReport::make("thm2.3.husimi_chain", t, lower.value, 0.0, D, 1e-2, cl));
          std::ostringstream os;
          os << label_of(eps, N) << " t=" << t << " D=" << D << " rhs=" << rhs << " lower=" << lower.value;
          log.line(os.str());
        }
        if (c.checkpoint) {
          std::ostringstream base;
          base << c.output << "/state_eps" << eps << "_N" << N;
          for (std::size_t m = 0; m < states.size(); ++m)
            quantum::save_checkpoint(base.str() + "_coupled" + std::to_string(m) + ".bin", states[m]);
          quantum::save_checkpoint(base.str() + "_hartree.bin", hartree);
        }
        return out;
      });
    }
  return plan;
}

Plan make_plan(const ExperimentConfig& c) {
  const std::string& id = c.experiment;
  if (id == "ot-selftest") return plan_ot_selftest(c);
  if (id == "combineq") return plan_combineq(c);
  if (id == "classical-dobrushin") return plan_classical(c);
  if (id == "vlasov-moments") return plan_vlasov(c);
  if (id == "toeplitz-identities") return plan_toeplitz(c);
  if (id == "mk-bracket") return plan_mk_bracket(c);
  if (id == "quantum-dobrushin") return plan_quantum(c);
  throw ConfigError("experiment: unknown identifier '" + id + "'");
}

std::vector<JobOutput> run_pool(const Plan& plan, int jobs, Logger& log) {
  std::vector<JobOutput> outs(plan.jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < plan.jobs.size(); i = next++) {
      log.line("start " + plan.labels[i]);
      try {
        outs[i] = plan.jobs[i](log);
      } catch (const std::exception& e) {
        JobOutput o;
        o.errored = true;
        o.reports.push_back(BoundReport::failure("error", 0.0, plan.labels[i] + ": " + e.what()));
        outs[i] = std::move(o);
        log.line("error in " + plan.labels[i] + ": " + e.what());
      }
      log.line("done " + plan.labels[i]);
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(plan.jobs.size())));
  std::vector<std::thread> threads;
  for (int t = 1; t < n; ++t) threads.emplace_back(worker);
  worker();
  for (auto& th : threads) th.join();
  return outs;
}

}  // namespace

RunSummary run_experiment(ExperimentConfig cfg, const RunOptions& opt) {
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.out) cfg.output = *opt.out;
  Logger log;
  if (opt.write_files) {
    std::filesystem::create_directories(cfg.output);
    log.open(cfg.output + "/run.log");
  }
  log.line("experiment " + cfg.experiment + " seed " + std::to_string(cfg.seed));

  const Plan plan = make_plan(cfg);
  const auto outs = run_pool(plan, opt.jobs, log);

  RunSummary summary;
  std::vector<std::pair<std::size_t, BoundReport>> rows;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    summary.guard_tripped |= outs[i].guard_tripped;
    summary.errored |= outs[i].errored;
    for (const auto& r : outs[i].reports) rows.emplace_back(i, r);
  }
  if (plan.finalize && !summary.errored && !summary.guard_tripped)
    for (const auto& r : plan.finalize(outs)) rows.emplace_back(outs.size(), r);

  bool all_pass = true;
  for (const auto& [i, r] : rows) {
    all_pass &= r.pass;
    summary.reports.push_back(r);
  }
  summary.exit_code = (summary.guard_tripped || summary.errored) ? 3 : (all_pass ? 0 : 1);

  if (opt.write_files) {
    std::ofstream jl(cfg.output + "/reports.jsonl");
    std::ofstream ts(cfg.output + "/timeseries.csv");
    ts << "sweep,inequality_id,t,lhs,lhs_stderr,rhs,margin,pass\n";
    ts.precision(17);
    for (const auto& [i, r] : rows) {
      nlohmann::json j = r.to_json();
      j["experiment"] = cfg.experiment;
      j["sweep"] = i;
      j["seed"] = cfg.seed;
      jl << j.dump() << '\n';
      ts << i << ',' << r.inequality_id << ',' << r.time << ',' << r.lhs_measured << ',' << r.lhs_stderr << ','
         << r.rhs << ',' << r.margin << ',' << (r.pass ? 1 : 0) << '\n';
    }
  }
  log.line("finished with exit status " + std::to_string(summary.exit_code));
  return summary;
}

}  // namespace mflab
