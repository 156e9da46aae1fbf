#include "mflab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mflab {

BoundReport BoundReport::make(std::string id, double time, double lhs, double lhs_stderr, double rhs,
                              double tolerance, std::map<std::string, double> constants) {
  BoundReport r;
  r.inequality_id = std::move(id);
  r.time = time;
  r.lhs_measured = lhs;
  r.lhs_stderr = lhs_stderr;
  r.rhs = rhs;
  r.tolerance = tolerance;
  r.constants = std::move(constants);
  r.margin = rhs + 3.0 * lhs_stderr + tolerance - lhs;
  r.pass = std::isfinite(lhs) && std::isfinite(rhs) && r.margin >= 0.0;
  return r;
}

BoundReport BoundReport::failure(std::string id, double time, std::string reason) {
  BoundReport r;
  r.inequality_id = std::move(id);
  r.time = time;
  r.lhs_measured = std::numeric_limits<double>::quiet_NaN();
  r.rhs = std::numeric_limits<double>::quiet_NaN();
  r.pass = false;
  r.margin = std::numeric_limits<double>::quiet_NaN();
  r.note = std::move(reason);
  return r;
}

nlohmann::json BoundReport::to_json() const {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json j;
  j["inequality_id"] = inequality_id;
  j["time"] = num(time);
  j["lhs_measured"] = num(lhs_measured);
  j["lhs_stderr"] = num(lhs_stderr);
  j["rhs"] = num(rhs);
  j["tolerance"] = num(tolerance);
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [k, v] : constants) c[k] = num(v);
  j["constants"] = c;
  j["pass"] = pass;
  j["margin"] = num(margin);
  if (!note.empty()) j["note"] = note;
  return j;
}

namespace bounds {

double K_p(double p) { return std::max(1.0, p - 1.0); }

double Lambda_p(double p, double lip) { return 2.0 * K_p(p) * (1.0 + std::pow(2.0, p - 1.0) * std::pow(lip, p)); }

double Lambda_quantum(double lip) { return 3.0 + 4.0 * lip * lip; }

namespace {

// (e^{L t} - 1)/L, accurate for small L t.
double growth(double L, double t) { return L == 0.0 ? t : std::expm1(L * t) / L; }

}  // namespace

double classical_rhs(double sup_grad, double lip, double p, int N, int n, double t) {
  if (!(p >= 1.0) || N < 1 || n < 1 || n > N || !(t >= 0.0) || sup_grad < 0.0 || lip < 0.0)
    throw std::invalid_argument("classical_rhs: need p >= 1, 1 <= n <= N, t >= 0");
  const double Lp = Lambda_p(p, lip);
  const double pre = std::pow(2.0, p) * K_p(p) * std::pow(sup_grad, p) * (std::floor(p / 2.0) + 1.0) /
                     std::pow(static_cast<double>(N), std::min(p / 2.0, 1.0));
  return n * pre * growth(Lp, t);
}

double classical_rhs(const Potential& V, double p, int N, int n, double t) {
  return classical_rhs(V.sup_grad(), V.lip_grad(), p, N, n, t);
}

double classical_gronwall_rhs(double sup_grad, double lip, int N, double t) {
  if (N < 1 || !(t >= 0.0)) throw std::invalid_argument("classical_gronwall_rhs: need N >= 1, t >= 0");
  return 8.0 / N * sup_grad * sup_grad * growth(Lambda_p(2.0, lip), t);
}

QuantumVariant parse_quantum_variant(const std::string& name) {
  if (name == "general") return QuantumVariant::General;
  if (name == "toeplitz") return QuantumVariant::Toeplitz;
  if (name == "factorized") return QuantumVariant::Factorized;
  throw std::invalid_argument("quantum_rhs: unknown variant '" + name + "'");
}

double quantum_rhs(QuantumVariant variant, double sup_grad, double lip, double eps, int N, int n, double t,
                   double init_term, int d) {
  if (!(t >= 0.0) || N < 1 || n < 1 || !(eps > 0.0) || d < 1)
    throw std::invalid_argument("quantum_rhs: need t >= 0, N >= 1, n >= 1, eps > 0");
  const double L = Lambda_quantum(lip);
  const double F2 = sup_grad * sup_grad;
  const double e = std::exp(L * t);
  switch (variant) {
    case QuantumVariant::General:
      return n * (8.0 / N * F2 * growth(L, t) + e / N * init_term);
    case QuantumVariant::Toeplitz:
      return n * ((2.0 * d * eps + init_term / N) * e + 8.0 * n / N * F2 * growth(L, t));
    case QuantumVariant::Factorized:
      return n * (2.0 * d * eps + 8.0 / N * F2 * (-std::expm1(-L * t)) / L) * e;
  }
  throw std::invalid_argument("quantum_rhs: unknown variant");
}

double quantum_rhs(QuantumVariant variant, const Potential& V, double eps, int N, int n, double t, double init_term) {
  return quantum_rhs(variant, V.sup_grad(), V.lip_grad(), eps, N, n, t, init_term, V.dim());
}

double combineq_rhs(double F_sup, double p, int N) {
  if (!(p > 0.0) || N < 1) throw std::invalid_argument("combineq_rhs: need p > 0, N >= 1");
  return (2.0 * std::floor(p / 2.0) + 2.0) / std::pow(static_cast<double>(N), std::min(p / 2.0, 1.0)) *
         std::pow(2.0 * F_sup, p);
}

double combineq_rhs_even(double F_sup, double p, int N) {
  if (!(p > 0.0) || N < 1) throw std::invalid_argument("combineq_rhs_even: need p > 0, N >= 1");
  return p / N * std::pow(2.0 * F_sup, p);
}

Density1D Density1D::gaussian(double mean, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("gaussian density: sd must be positive");
  Density1D r;
  r.name = "gaussian";
  r.sample = [mean, sd](CounterRng& rng) { return mean + sd * rng.normal(); };
  r.pdf = [mean, sd](double x) {
    const double u = (x - mean) / sd;
    return std::exp(-0.5 * u * u) / (sd * std::sqrt(2.0 * std::numbers::pi));
  };
  r.lo = mean - 12.0 * sd;
  r.hi = mean + 12.0 * sd;
  return r;
}

double convolve_grad(const Potential& V, const Density1D& rho, double x, int nodes) {
  const double h = (rho.hi - rho.lo) / (nodes - 1);
  double s = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double z = rho.lo + h * i;
    const double wgt = (i == 0 || i == nodes - 1) ? 0.5 : 1.0;
    s += wgt * V.grad1(x - z) * rho.pdf(z);
  }
  return s * h;
}

namespace {

// Cubic Hermite table of F*rho and its derivative (F' * rho), both by quadrature.
struct ConvolutionTable {
  double lo, h;
  std::vector<double> f, df;

  ConvolutionTable(const Potential& V, const Density1D& rho, double lo_, double hi_, int G) : lo(lo_) {
    h = (hi_ - lo_) / (G - 1);
    f.resize(G);
    df.resize(G);
    const int nodes = 2001;
    const double hq = (rho.hi - rho.lo) / (nodes - 1);
    std::vector<double> zq(nodes), wq(nodes);
    for (int i = 0; i < nodes; ++i) {
      zq[i] = rho.lo + hq * i;
      wq[i] = ((i == 0 || i == nodes - 1) ? 0.5 : 1.0) * hq * rho.pdf(zq[i]);
    }
    for (int g = 0; g < G; ++g) {
      const double x = lo + h * g;
      double a = 0.0, b = 0.0;
      for (int i = 0; i < nodes; ++i) {
        a += wq[i] * V.grad1(x - zq[i]);
        b += wq[i] * V.second_derivative1(x - zq[i]);
      }
      f[g] = a;
      df[g] = b;
    }
  }

  bool covers(double x) const { return x >= lo && x <= lo + h * (f.size() - 1); }

  double operator()(double x) const {
    const double t = (x - lo) / h;
    int i = static_cast<int>(std::floor(t));
    i = std::clamp(i, 0, static_cast<int>(f.size()) - 2);
    const double s = t - i, s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * f[i] + (s3 - 2 * s2 + s) * h * df[i] + (-2 * s3 + 3 * s2) * f[i + 1] +
           (s3 - s2) * h * df[i + 1];
  }
};

}  // namespace

McEstimate combineq_mc(const Potential& V, const Density1D& rho, double p, int N, long n_mc, std::uint64_t seed) {
  if (V.dim() != 1) throw std::invalid_argument("combineq_mc: one-dimensional potentials only");
  if (N < 1 || n_mc < 2 || !(p > 0.0)) throw std::invalid_argument("combineq_mc: need N >= 1, n_mc >= 2, p > 0");
  McEstimate est;
  est.samples = n_mc;
  if (V.is_zero()) return est;
  const ConvolutionTable table(V, rho, rho.lo, rho.hi, 4001);
  constexpr long kChunk = 10000;
  const long chunks = (n_mc + kChunk - 1) / kChunk;
  double sum = 0.0, sum2 = 0.0;
  std::vector<double> xs(N);
  for (long c = 0; c < chunks; ++c) {
    CounterRng rng(seed, static_cast<std::uint64_t>(c));
    const long count = std::min(kChunk, n_mc - c * kChunk);
    double csum = 0.0, csum2 = 0.0;
    for (long s = 0; s < count; ++s) {
      for (int k = 0; k < N; ++k) xs[k] = rho.sample(rng);
      double emp = 0.0;
      for (int k = 0; k < N; ++k) emp += V.grad1(xs[0] - xs[k]);
      emp /= N;
      const double conv = table.covers(xs[0]) ? table(xs[0]) : convolve_grad(V, rho, xs[0]);
      const double v = std::pow(std::abs(conv - emp), p);
      csum += v;
      csum2 += v * v;
    }
    sum += csum;
    sum2 += csum2;
  }
  est.mean = sum / n_mc;
  const double var = std::max(0.0, (sum2 - n_mc * est.mean * est.mean) / (n_mc - 1));
  est.std_err = std::sqrt(var / n_mc);
  return est;
}

std::uint64_t count_S_Np(int N, int p) {
  if (N < 1 || p < 0 || p % 2 != 0) throw std::invalid_argument("count_S_Np: need N >= 1 and even p >= 0");
  std::uint64_t r = 1;
  for (int i = 0; i < p; ++i) r *= static_cast<std::uint64_t>(N - 1);
  return r;
}

std::uint64_t count_S_Np_enumerated(int N, int p) {
  if (N < 1 || p < 1) throw std::invalid_argument("count_S_Np_enumerated: need N >= 1, p >= 1");
  double total = std::pow(static_cast<double>(N), p);
  if (total > 1e7) throw std::invalid_argument("count_S_Np_enumerated: N^p exceeds 10^7");
  std::vector<int> g(p, 0), hits(N, 0);
  std::uint64_t count = 0;
  const auto maps = static_cast<std::uint64_t>(total);
  for (std::uint64_t code = 0; code < maps; ++code) {
    std::uint64_t c = code;
    std::fill(hits.begin(), hits.end(), 0);
    for (int l = 0; l < p; ++l) {
      g[l] = static_cast<int>(c % N);
      c /= N;
      ++hits[g[l]];
    }
    bool witness = false;
    for (int m = 1; m < N; ++m) witness = witness || hits[m] == 1;  // value m+1 >= 2 in 1-based labels
    if (witness) ++count;
  }
  return count;
}

double moment_rhs(double M0, double p, double lip, double t) {
  if (!(p >= 1.0) || !(t >= 0.0) || M0 < 0.0 || lip < 0.0)
    throw std::invalid_argument("moment_rhs: need p >= 1, t >= 0, M0 >= 0");
  return M0 * std::exp((p - 1.0) * (1.0 + 2.0 * lip) * t);
}

}  // namespace bounds
}  // namespace mflab
