#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "mflab/quantum.hpp"

namespace mflab::quantum {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<cplx> kinetic_table(const GridSpec& g, double dt) {
  const auto k = g.k_axis();
  std::vector<cplx> t(k.size());
  for (std::size_t j = 0; j < k.size(); ++j) t[j] = std::polar(1.0, -dt * g.epsilon * k[j] * k[j] / 2.0);
  return t;
}

void check_step(const GridSpec& g, double dt) {
  g.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  const double kmax = g.k_max();
  const double phase = dt * g.axes() * g.epsilon * kmax * kmax / 2.0;
  if (!(phase < kPi))
    throw std::invalid_argument("time step too large: kinetic phase " + std::to_string(phase) + " >= pi");
}

void check_state(const WaveFunction& psi, const GridSpec& g) {
  if (psi.grid.axes() != g.axes() || psi.grid.points_per_axis != g.points_per_axis ||
      psi.grid.box_half_width != g.box_half_width || psi.grid.epsilon != g.epsilon ||
      psi.values.size() != g.size())
    throw std::invalid_argument("wave function does not live on the propagator grid");
}

// Multiplies psi by a phase built from per-axis factors (null = 1), pair factors
// pair_table[i_a - i_b + n - 1] for the listed axis pairs, and a constant.
void apply_phase(CVec& psi, int A, int n, const std::vector<const cplx*>& one_body,
                 const std::vector<std::pair<int, int>>& pairs, const cplx* pair_table, cplx constant) {
  const int last = A - 1;
  std::vector<std::pair<int, int>> outer_pairs;
  std::vector<int> last_partners;
  for (auto [a, b] : pairs) {
    if (a == last) last_partners.push_back(b);
    else if (b == last) last_partners.push_back(a);
    else outer_pairs.emplace_back(a, b);
  }
  std::size_t outer = 1;
  for (int a = 0; a < last; ++a) outer *= static_cast<std::size_t>(n);
  std::vector<int> idx(std::max(last, 1), 0);
  const cplx* tl = one_body[last];
  for (std::size_t o = 0; o < outer; ++o) {
    cplx partial = constant;
    for (int a = 0; a < last; ++a)
      if (one_body[a]) partial *= one_body[a][idx[a]];
    for (auto [a, b] : outer_pairs) partial *= pair_table[idx[a] - idx[b] + n - 1];
    cplx* row = psi.data() + o * static_cast<std::size_t>(n);
    for (int j = 0; j < n; ++j) {
      cplx ph = partial;
      if (tl) ph *= tl[j];
      for (int a : last_partners) ph *= pair_table[idx[a] - j + n - 1];
      row[j] *= ph;
    }
    for (int a = last - 1; a >= 0; --a) {
      if (++idx[a] < n) break;
      idx[a] = 0;
    }
  }
}

void apply_kinetic(CVec& psi, int A, int n, const std::vector<cplx>& table) {
  const std::vector<int> shape(A, n);
  fft_forward(psi.data(), shape);
  const std::vector<const cplx*> factors(A, table.data());
  apply_phase(psi, A, n, factors, {}, nullptr, cplx(1.0, 0.0));
  fft_inverse(psi.data(), shape);
}

std::vector<double> pair_values(const GridSpec& g, const Potential& V) {
  const int n = g.points_per_axis;
  const double dx = g.dx();
  std::vector<double> t(2 * n - 1);
  for (int D = -(n - 1); D <= n - 1; ++D) t[D + n - 1] = V.eval1(D * dx);
  return t;
}

}  // namespace

NBodyPropagator::NBodyPropagator(const GridSpec& g, const Potential& V, double dt, const Potential* external)
    : grid_(g), dt_(dt) {
  if (g.doubled) throw std::invalid_argument("N-body propagator expects a non-doubled grid");
  if (g.axes() > 4) throw std::invalid_argument("at most 4 grid dimensions are supported");
  check_step(g, dt);
  const int n = g.points_per_axis;
  const int N = g.n_particles;
  const double h = 0.5 * dt / g.epsilon;
  const auto vals = pair_values(g, V);
  pair_phase_.resize(vals.size());
  // (1/2N) sum over ordered pairs k != l equals (1/N) sum over k < l.
  for (std::size_t m = 0; m < vals.size(); ++m) pair_phase_[m] = std::polar(1.0, -h * vals[m] / N);
  constant_phase_ = std::polar(1.0, -h * V.eval1(0.0) / 2.0);
  one_body_phase_.assign(n, cplx(1.0, 0.0));
  if (external) {
    const auto x = g.x_axis();
    for (int i = 0; i < n; ++i) one_body_phase_[i] = std::polar(1.0, -h * external->eval1(x[i]));
  }
  kinetic_phase_ = kinetic_table(g, dt);
}

void NBodyPropagator::apply_potential(WaveFunction& psi) const {
  const int A = grid_.axes();
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < A; ++a)
    for (int b = a + 1; b < A; ++b) pairs.emplace_back(a, b);
  const std::vector<const cplx*> ob(A, one_body_phase_.data());
  apply_phase(psi.values, A, grid_.points_per_axis, ob, pairs, pair_phase_.data(), constant_phase_);
}

void NBodyPropagator::apply_kinetic(WaveFunction& psi) const {
  quantum::apply_kinetic(psi.values, grid_.axes(), grid_.points_per_axis, kinetic_phase_);
}

void NBodyPropagator::step(WaveFunction& psi) const {
  check_state(psi, grid_);
  apply_potential(psi);
  apply_kinetic(psi);
  apply_potential(psi);
  psi.time += dt_;
}

WaveFunction split_step_nbody(const WaveFunction& psi, const Potential& V, double dt, const Potential* external) {
  NBodyPropagator prop(psi.grid, V, dt, external);
  WaveFunction out = psi;
  prop.step(out);
  return out;
}

std::vector<double> hartree_potential(const WaveFunction& psi, const Potential& V) {
  const GridSpec& g = psi.grid;
  if (g.axes() != 1) throw std::invalid_argument("hartree_potential: single-particle state expected");
  const int n = g.points_per_axis;
  const auto table = pair_values(g, V);
  std::vector<double> rho(n);
  for (int j = 0; j < n; ++j) rho[j] = std::norm(psi.values[j]) * g.dx();
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += table[i - j + n - 1] * rho[j];
    out[i] = s;
  }
  return out;
}

HartreePropagator::HartreePropagator(const GridSpec& g, const Potential& V, double dt)
    : grid_(g.single()), V_(V), dt_(dt) {
  check_step(grid_, dt);
  kinetic_phase_ = kinetic_table(grid_, dt);
}

void HartreePropagator::half_kick(WaveFunction& psi, const std::vector<double>& v_rho) const {
  const double h = 0.5 * dt_ / grid_.epsilon;
  for (std::size_t i = 0; i < v_rho.size(); ++i) psi.values[i] *= std::polar(1.0, -h * v_rho[i]);
}

void HartreePropagator::kinetic(WaveFunction& psi) const {
  quantum::apply_kinetic(psi.values, 1, grid_.points_per_axis, kinetic_phase_);
}

void HartreePropagator::step(WaveFunction& psi) const {
  check_state(psi, grid_);
  half_kick(psi, hartree_potential(psi, V_));
  kinetic(psi);
  half_kick(psi, hartree_potential(psi, V_));
  psi.time += dt_;
}

WaveFunction hartree_step(const WaveFunction& psi, const Potential& V, double dt) {
  HartreePropagator prop(psi.grid, V, dt);
  WaveFunction out = psi;
  prop.step(out);
  return out;
}

double hartree_energy(const WaveFunction& psi, const Potential& V) {
  const GridSpec& g = psi.grid;
  if (g.axes() != 1) throw std::invalid_argument("hartree_energy: single-particle state expected");
  const int n = g.points_per_axis;
  CVec hat = psi.values;
  fft_forward(hat.data(), {n});
  const auto k = g.k_axis();
  double num = 0.0, den = 0.0;
  for (int j = 0; j < n; ++j) {
    const double w = std::norm(hat[j]);
    num += w * k[j] * k[j];
    den += w;
  }
  const double mass = psi.norm() * psi.norm();
  const double kinetic = g.epsilon * g.epsilon * mass * num / den;
  const auto vr = hartree_potential(psi, V);
  double inter = 0.0;
  for (int i = 0; i < n; ++i) inter += vr[i] * std::norm(psi.values[i]) * g.dx();
  return kinetic + inter;
}

CoupledPropagator::CoupledPropagator(const GridSpec& doubled, const Potential& V, double dt)
    : grid_(doubled), V_(V), dt_(dt), hartree_(doubled.single(), V, dt) {
  if (!doubled.doubled) throw std::invalid_argument("coupled propagator expects a doubled grid");
  if (doubled.d * doubled.n_particles > 2) throw std::invalid_argument("coupled evolution supports N*d <= 2");
  check_step(doubled, dt);
  const int N = doubled.n_particles;
  const double h = 0.5 * dt / doubled.epsilon;
  const auto vals = pair_values(doubled, V);
  pair_phase_.resize(vals.size());
  for (std::size_t m = 0; m < vals.size(); ++m) pair_phase_[m] = std::polar(1.0, -h * vals[m] / N);
  constant_phase_ = std::polar(1.0, -h * V.eval1(0.0) / 2.0);
  kinetic_phase_ = kinetic_table(doubled, dt);
}

void CoupledPropagator::half_kick(WaveFunction& Phi, const std::vector<double>& v_rho) const {
  const int N = grid_.n_particles;
  const int A = grid_.axes();
  const double h = 0.5 * dt_ / grid_.epsilon;
  std::vector<cplx> fx(v_rho.size());
  for (std::size_t i = 0; i < v_rho.size(); ++i) fx[i] = std::polar(1.0, -h * v_rho[i]);
  std::vector<const cplx*> ob(A, nullptr);
  for (int a = 0; a < N; ++a) ob[a] = fx.data();
  std::vector<std::pair<int, int>> pairs;
  for (int a = N; a < A; ++a)
    for (int b = a + 1; b < A; ++b) pairs.emplace_back(a, b);
  apply_phase(Phi.values, A, grid_.points_per_axis, ob, pairs, pair_phase_.data(), constant_phase_);
}

void CoupledPropagator::step(WaveFunction& Phi, WaveFunction& hartree_ref) const {
  check_state(Phi, grid_);
  if (std::abs(Phi.time - hartree_ref.time) > 0.5 * dt_)
    throw std::invalid_argument("coupled state and Hartree reference are not time-aligned");
  const auto v0 = hartree_potential(hartree_ref, V_);
  hartree_.half_kick(hartree_ref, v0);
  half_kick(Phi, v0);
  hartree_.kinetic(hartree_ref);
  apply_kinetic(Phi.values, grid_.axes(), grid_.points_per_axis, kinetic_phase_);
  const auto v1 = hartree_potential(hartree_ref, V_);
  hartree_.half_kick(hartree_ref, v1);
  half_kick(Phi, v1);
  Phi.time += dt_;
  hartree_ref.time += dt_;
}

void coupled_quantum_advance(WaveFunction& Phi, WaveFunction& hartree_ref, const Potential& V, double dt,
                             int n_steps) {
  CoupledPropagator prop(Phi.grid, V, dt);
  for (int s = 0; s < n_steps; ++s) prop.step(Phi, hartree_ref);
}

}  // namespace mflab::quantum
