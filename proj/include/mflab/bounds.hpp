#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include <json.hpp>

#include "mflab/potential.hpp"
#include "mflab/rng.hpp"

namespace mflab {

// One inequality checked at one time: pass iff lhs <= rhs + 3*stderr + tolerance.
struct BoundReport {
  std::string inequality_id;
  double time = 0.0;
  double lhs_measured = 0.0;
  double lhs_stderr = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  std::map<std::string, double> constants;
  bool pass = false;
  double margin = 0.0;  // rhs + 3*stderr + tolerance - lhs

  static BoundReport make(std::string id, double time, double lhs, double lhs_stderr, double rhs, double tolerance,
                          std::map<std::string, double> constants);
  // A report that failed for a reason other than the inequality (guard trip, solver error).
  static BoundReport failure(std::string id, double time, std::string reason);
  std::string note;  // empty unless the row records a guard trip or error
  nlohmann::json to_json() const;
};

namespace bounds {

double K_p(double p);
// Lambda_p = 2 K_p (1 + 2^{p-1} Lip^p).
double Lambda_p(double p, double lip);
// Lambda = 3 + 4 Lip^2 for the quantum estimate.
double Lambda_quantum(double lip);

// n * 2^p K_p |grad V|^p ([p/2]+1) / N^{min(p/2,1)} * (e^{Lambda_p t} - 1)/Lambda_p.
double classical_rhs(double sup_grad, double lip, double p, int N, int n, double t);
double classical_rhs(const Potential& V, double p, int N, int n, double t);

// (8/N) |grad V|^2 (e^{Lambda_2 t} - 1)/Lambda_2: the Gronwall bound on D^2_N(t).
double classical_gronwall_rhs(double sup_grad, double lip, int N, double t);

enum class QuantumVariant { General, Toeplitz, Factorized };
QuantumVariant parse_quantum_variant(const std::string& name);

double quantum_rhs(QuantumVariant variant, double sup_grad, double lip, double eps, int N, int n, double t,
                   double init_term, int d = 1);
double quantum_rhs(QuantumVariant variant, const Potential& V, double eps, int N, int n, double t, double init_term);

// (2[p/2]+2)/N^{min(p/2,1)} (2 F)^p.
double combineq_rhs(double F_sup, double p, int N);
// (p/N)(2F)^p, valid for even integer p.
double combineq_rhs_even(double F_sup, double p, int N);

// Probability density on R with a sampler, used by combineq_mc.
struct Density1D {
  std::string name;
  std::function<double(CounterRng&)> sample;
  std::function<double(double)> pdf;
  double lo = -10.0, hi = 10.0;  // quadrature range carrying all but negligible mass

  static Density1D gaussian(double mean, double sd);
};

struct McEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  long samples = 0;
};

// F * rho at x by trapezoidal quadrature, F = grad V (d = 1).
double convolve_grad(const Potential& V, const Density1D& rho, double x, int nodes = 2001);

// Monte-Carlo mean of |F*rho(x_1) - (1/N) sum_k F(x_1 - x_k)|^p over i.i.d. draws.
// Chunk c of 10^4 samples uses RNG stream c.
McEstimate combineq_mc(const Potential& V, const Density1D& rho, double p, int N, long n_mc, std::uint64_t seed);

// Closed form (N-1)^p for the number of index tuples with nonzero expectation.
std::uint64_t count_S_Np(int N, int p);
// Exhaustive count of maps g: {1..p} -> {1..N} such that some m >= 2 has exactly one preimage.
std::uint64_t count_S_Np_enumerated(int N, int p);

double moment_rhs(double M0, double p, double lip, double t);

}  // namespace bounds
}  // namespace mflab
