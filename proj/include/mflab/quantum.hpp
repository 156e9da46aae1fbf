#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mflab/grid.hpp"
#include "mflab/potential.hpp"
#include "mflab/transport.hpp"

namespace mflab {

// Grid samples psi(x) of a wave function (continuum normalization:
// sum |psi|^2 * cell_volume = 1).
struct WaveFunction {
  GridSpec grid;
  CVec values;
  double time = 0.0;

  static WaveFunction zeros(const GridSpec& g);
  std::vector<int> shape() const { return std::vector<int>(grid.axes(), grid.points_per_axis); }
  double norm() const;
  void normalize();
};

// Trace-one operator in the orthonormal grid basis e_i = delta_i / sqrt(cell):
// the kernel is rho(x_i, x_j) = matrix(i, j) / cell_volume.
struct DensityMatrix {
  GridSpec grid;
  Eigen::MatrixXcd matrix;

  static DensityMatrix pure(const WaveFunction& psi);
  double trace() const { return matrix.trace().real(); }
  double hermiticity_error() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }
  // Smallest Rayleigh quotient over `count` random complex vectors.
  double min_rayleigh(int count, std::uint64_t seed) const;
};

// Symbol of a Toeplitz operator divided by (2 pi eps)^{dn}: a probability
// measure whose atoms are laid out per particle as (q_1, p_1, q_2, p_2, ...).
using SymbolMeasure = DiscreteMeasure;

// Real function sampled on a tensor lattice of phase space; values(i, k) at (x[i], xi[k]).
struct PhaseSpaceFunction {
  std::vector<double> x;
  std::vector<double> xi;
  Eigen::MatrixXd values;

  double dx() const { return x.size() > 1 ? x[1] - x[0] : 1.0; }
  double dxi() const { return xi.size() > 1 ? xi[1] - xi[0] : 1.0; }
  double integral() const { return values.sum() * dx() * dxi(); }
  // Weighted cloud on the lattice (negative values clipped, weights renormalized).
  DiscreteMeasure to_measure(double relative_cutoff = 0.0) const;
  void write_csv(const std::string& path) const;
};

namespace quantum {

// ---- coherent states and the phase-space toolkit -------------------------

// Throws std::domain_error if the coherent state at (q, p) leaks more than
// 1e-12 of its mass outside the box in position or momentum space.
void check_inside(const GridSpec& g, double q, double p);

// Coordinates of |z, eps> in the orthonormal grid basis of a single-particle grid.
Eigen::VectorXcd coherent_vector(const GridSpec& g, double q, double p, bool renormalize = true);
WaveFunction coherent_state(const GridSpec& g, double q, double p);
// Tensor product of coherent states, one (q, p) per axis of g.
WaveFunction coherent_product(const GridSpec& g, const std::vector<double>& q, const std::vector<double>& p);

struct PhaseMoments {
  double mean_x = 0.0, mean_p = 0.0, var_x = 0.0, var_p = 0.0;
};
// Position and momentum (p = eps k) moments of a single-particle state.
PhaseMoments moments(const DensityMatrix& rho);

DensityMatrix toeplitz_operator(const GridSpec& g, const SymbolMeasure& symbol);
// sum_m w_m <z_m| rho |z_m>, i.e. trace(OP^T(sum w_m (2 pi eps)^d delta_{z_m}) rho).
double toeplitz_pairing(const SymbolMeasure& symbol, const DensityMatrix& rho);

// <z| rho |z> / (2 pi eps) for a single-particle density matrix.
double husimi_value(const DensityMatrix& rho, double q, double p);

// Wigner transform on the grid x_i and xi_k = eps*pi*k/(n*dx), k = -n/2..n/2-1.
PhaseSpaceFunction wigner_transform(const DensityMatrix& rho);
// Husimi transform by coherent-state expectations on the given lattice.
PhaseSpaceFunction husimi_transform(const DensityMatrix& rho, const std::vector<double>& q,
                                    const std::vector<double>& p);
// Same, on the lattice used by wigner_transform.
PhaseSpaceFunction husimi_transform(const DensityMatrix& rho);
// Cross-check route: Gaussian smoothing (variance eps/2 per coordinate) of a Wigner function.
PhaseSpaceFunction husimi_from_wigner(const PhaseSpaceFunction& W, double eps);

struct HusimiLattice {
  int points = 24;             // per axis
  double width_sigmas = 6.0;   // half-width in Husimi standard deviations
};
// Husimi transform sampled on a lattice centred at the state's phase-space mean,
// returned as a probability cloud on R^2.
DiscreteMeasure husimi_cloud(const DensityMatrix& rho, const HusimiLattice& lattice = {});

// ---- dynamics ------------------------------------------------------------

// Strang split-step propagator for i d/dt Psi = -(eps/2) sum Lap Psi
//   + (1/eps) [ (1/2N) sum_{k,l} V(x_k - x_l) + sum_k U(x_k) ] Psi
// on a grid with N = grid.n_particles (d = 1, N <= 4). U is an optional
// one-body potential (null for the pure N-body problem).
class NBodyPropagator {
 public:
  NBodyPropagator(const GridSpec& g, const Potential& V, double dt, const Potential* external = nullptr);
  void step(WaveFunction& psi) const;
  double dt() const { return dt_; }

 private:
  void apply_potential(WaveFunction& psi) const;
  void apply_kinetic(WaveFunction& psi) const;
  GridSpec grid_;
  double dt_;
  std::vector<cplx> pair_phase_;   // indexed by (i_k - i_l) + n - 1
  std::vector<cplx> one_body_phase_;
  cplx constant_phase_;
  std::vector<cplx> kinetic_phase_;  // per axis, FFT order
};

WaveFunction split_step_nbody(const WaveFunction& psi, const Potential& V, double dt,
                              const Potential* external = nullptr);

// V_rho(x_i) = sum_j V(x_i - x_j) |psi_j|^2 dx for a single-particle state.
std::vector<double> hartree_potential(const WaveFunction& psi, const Potential& V);

// Strang step for the Hartree equation; V_rho is recomputed from the current
// density before each half kick and held fixed during it.
class HartreePropagator {
 public:
  HartreePropagator(const GridSpec& g, const Potential& V, double dt);
  void step(WaveFunction& psi) const;
  void half_kick(WaveFunction& psi, const std::vector<double>& v_rho) const;
  void kinetic(WaveFunction& psi) const;

 private:
  GridSpec grid_;
  Potential V_;
  double dt_;
  std::vector<cplx> kinetic_phase_;
};

WaveFunction hartree_step(const WaveFunction& psi, const Potential& V, double dt);

// trace(-eps^2 Lap rho) + double integral V(x-z) |psi(z)|^2 |psi(x)|^2.
double hartree_energy(const WaveFunction& psi, const Potential& V);

// Reduced density matrix of the first n particles (axes).
DensityMatrix partial_trace(const WaveFunction& psi, int n);
// Reduced density matrix of a single axis.
DensityMatrix axis_marginal(const WaveFunction& psi, int axis);

// Fraction of the mass with every coordinate inside [-L/2, L/2].
double mass_inside_half_box(const WaveFunction& psi);

// Trace norm of the difference of two density matrices on the same grid.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

// ---- couplings -------------------------------------------------------------

// Convex combination of pure states on a two-variable grid.
struct MixedCoupling {
  std::vector<double> weights;
  std::vector<WaveFunction> states;
};

// trace((Q*Q + P*P) R) with Q = x_1 - x_2 and P = -i eps (d_1 - d_2).
double qp_cost_trace(const WaveFunction& Phi);
double qp_cost_trace(const DensityMatrix& R);
double qp_cost_trace(const MixedCoupling& R);

// Toeplitz lift of a transport plan between symbols on R^2: sum pi_ij |z_i><z_i| (x) |z'_j><z'_j|.
MixedCoupling toeplitz_coupling(const GridSpec& single, const SymbolMeasure& mu1, const SymbolMeasure& mu2,
                                const TransportPlan& plan);

// dist_MK2(mu1, mu2)^2 + 2 d eps.
double mk_eps_upper(const SymbolMeasure& mu1, const SymbolMeasure& mu2, double eps, int d = 1);

struct LowerBracket {
  double value = 0.0;          // W2(Husimi_1, Husimi_2)^2 - 2 d eps
  double husimi_w2_sq = 0.0;
};
LowerBracket mk_eps_lower(const DensityMatrix& rho1, const DensityMatrix& rho2, const HusimiLattice& lattice = {});

// Strang step of the coupled evolution on the doubled grid (x_1..x_N, y_1..y_N):
// the x variables feel the Hartree potential of `hartree_ref`, the y variables
// the pairwise N-body potential. hartree_ref is advanced in lockstep.
class CoupledPropagator {
 public:
  CoupledPropagator(const GridSpec& doubled, const Potential& V, double dt);
  void step(WaveFunction& Phi, WaveFunction& hartree_ref) const;

 private:
  void half_kick(WaveFunction& Phi, const std::vector<double>& v_rho) const;
  GridSpec grid_;
  Potential V_;
  double dt_;
  HartreePropagator hartree_;
  std::vector<cplx> pair_phase_;
  cplx constant_phase_;
  std::vector<cplx> kinetic_phase_;
};

void coupled_quantum_advance(WaveFunction& Phi, WaveFunction& hartree_ref, const Potential& V, double dt,
                             int n_steps = 1);

// (1/N) sum_j <Phi| |x_j - y_j|^2 + eps^2 |k_{x_j} - k_{y_j}|^2 |Phi>.
double dobrushin_quantum_functional(const WaveFunction& Phi, double eps, int N);

// Average of jointly permuted couplings over S_N. Atoms of source/target are
// per-particle blocks (q, p); output atoms are (source block..., target block...).
SymbolMeasure symmetrize_initial_coupling(const TransportPlan& plan, const SymbolMeasure& source,
                                          const SymbolMeasure& target, int N);
// Classical cost (1/N) sum_j |a_j - b_j|^2 of a coupling symbol on R^{4N} (d = 1).
double symbol_coupling_cost(const SymbolMeasure& coupling, int N);
// Product coherent state on the doubled grid for one coupling atom.
WaveFunction lift_coupling_atom(const GridSpec& doubled, const Eigen::VectorXd& atom);

// ---- checkpoints -------------------------------------------------------------

// Layout: 8-byte magic "MFLABST1", uint64 little-endian header length, JSON
// header, then little-endian complex128 values in row-major axis order.
void save_checkpoint(const std::string& path, const WaveFunction& psi);
WaveFunction load_checkpoint(const std::string& path);

}  // namespace quantum
}  // namespace mflab
