#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mflab/potential.hpp"
#include "mflab/rng.hpp"
#include "mflab/transport.hpp"

namespace mflab {

// Positions and momenta of N particles in R^d (one particle per row).
struct PhaseState {
  Eigen::MatrixXd x;
  Eigen::MatrixXd xi;
  double time = 0.0;

  int n() const { return static_cast<int>(x.rows()); }
  int d() const { return static_cast<int>(x.cols()); }
};

// Particle approximation of a Vlasov solution f(t). Each row of cloud.points
// holds (x, xi) in R^{2d}.
struct VlasovCloud {
  DiscreteMeasure cloud;
  double time = 0.0;

  int d() const { return cloud.dim() / 2; }
  int size() const { return cloud.size(); }
};

// Monte-Carlo sample of the coupling pi_N(t): sample s pairs
// mean_field_side[s] (driven by the reference field) with nbody_side[s].
struct CoupledEnsemble {
  std::vector<PhaseState> mean_field_side;
  std::vector<PhaseState> nbody_side;
  VlasovCloud reference_cloud;
  std::uint64_t rng_seed = 0;

  int samples() const { return static_cast<int>(mean_field_side.size()); }
  double time() const { return mean_field_side.empty() ? 0.0 : mean_field_side.front().time; }
};

// Initial data families for particles in phase space.
struct InitialData {
  enum class Kind { Gaussian, Uniform } kind = Kind::Gaussian;
  int d = 1;
  double x_mean = 0.0, xi_mean = 0.0;  // applied to every coordinate
  double x_std = 1.0, xi_std = 1.0;    // Gaussian standard deviations
  double x_half = 1.0, xi_half = 1.0;  // uniform half-widths

  static InitialData standard_normal(int d) {
    InitialData f;
    f.d = d;
    return f;
  }
  // Draws one phase point (x, xi) in R^{2d}.
  void sample(CounterRng& rng, double* out) const;
};

using ForceField = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& positions)>;

namespace classical {

// F_k = -(1/N) sum_l grad V(x_k - x_l). Contributions are summed in position
// order, so relabelling the particles permutes the output exactly.
Eigen::MatrixXd nbody_force(const Potential& V, const Eigen::MatrixXd& X);

// -sum_m w_m grad V(x - y_m) over the spatial part of the cloud.
Eigen::VectorXd mean_field_force(const Potential& V, const Eigen::VectorXd& x, const VlasovCloud& cloud);

// Mean-field force at many targets. In d = 1 with many targets it is evaluated
// from a cubic Hermite table built by direct summation (relative error far
// below the integrator's); otherwise by direct summation.
Eigen::MatrixXd mean_field_force_many(const Potential& V, const Eigen::MatrixXd& targets, const VlasovCloud& cloud);

// Velocity Verlet; dt may be negative (time reversal).
PhaseState verlet_step(const PhaseState& state, const ForceField& force, double dt);

double nbody_energy(const Potential& V, const PhaseState& s);

VlasovCloud vlasov_advance(const VlasovCloud& cloud, const Potential& V, double dt, int n_steps);

VlasovCloud sample_vlasov_cloud(const InitialData& f, int M, std::uint64_t seed, std::uint64_t stream = 0);

// Diagonal initial coupling pi_N = D#(f^in)^{otimes N}: both sides start identical.
// Sample s uses RNG stream s + 1; the reference cloud uses stream 0.
CoupledEnsemble make_diagonal_ensemble(const InitialData& f, int N, int M, int M_ref, std::uint64_t seed);

// Advances every sample pair and the reference cloud by n_steps Verlet steps.
// Throws InvalidState if the ensemble and the reference cloud are more than dt/2 apart.
void coupled_advance(CoupledEnsemble& ens, const Potential& V, double dt, int n_steps = 1);

struct Estimate {
  double mean = 0.0;
  double std_err = 0.0;
};

// Monte-Carlo mean of (1/N) sum_j (|x_j - y_j|^p + |xi_j - eta_j|^p).
double dobrushin_functional(const CoupledEnsemble& ens, double p);
Estimate dobrushin_estimate(const CoupledEnsemble& ens, double p);

// Equal-weight cloud of (x_1..x_n, xi_1..xi_n) across samples.
DiscreteMeasure marginal_cloud(const std::vector<PhaseState>& side, int n);

double moment_p(const VlasovCloud& cloud, double p);
Estimate moment_p_estimate(const VlasovCloud& cloud, double p);

// CSV with columns weight, x..., xi...
void write_marginal_csv(const std::string& path, const DiscreteMeasure& cloud, int d, int n);

}  // namespace classical
}  // namespace mflab
