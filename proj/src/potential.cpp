#include "mflab/potential.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "mflab/rng.hpp"

namespace mflab {

namespace {

// Relative slack added to constants obtained by grid maximization.
constexpr double kSampledSlack = 1e-3;

double norm2(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return s;
}

}  // namespace

Potential Potential::gaussian(double amplitude, double width, int d) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian potential: width must be positive");
  if (d < 1) throw std::invalid_argument("gaussian potential: dimension must be >= 1");
  if (!std::isfinite(amplitude)) throw std::invalid_argument("gaussian potential: amplitude must be finite");
  Potential V;
  V.name_ = "gaussian";
  V.family_ = Family::Gaussian;
  V.dim_ = d;
  V.amplitude_ = amplitude;
  V.width_ = width;
  V.refresh_cache();
  // |grad| = |A| r/w^2 exp(-r^2/2w^2) peaks at r = w; Hessian eigenvalues
  // g''(r) and g'(r)/r both peak in modulus at r = 0 with value |A|/w^2.
  V.sup_grad_ = std::abs(amplitude) * std::exp(-0.5) / width;
  V.lip_grad_ = std::abs(amplitude) / (width * width);
  V.sup_abs_ = std::abs(amplitude);
  return V;
}

Potential Potential::cosine(double amplitude, double wavenumber, double cutoff_radius, int d) {
  if (!(cutoff_radius > 0.0)) throw std::invalid_argument("cosine potential: cutoff radius must be positive");
  if (!(wavenumber >= 0.0)) throw std::invalid_argument("cosine potential: wavenumber must be nonnegative");
  if (d < 1) throw std::invalid_argument("cosine potential: dimension must be >= 1");
  Potential V;
  V.name_ = "cosine";
  V.family_ = Family::Cosine;
  V.dim_ = d;
  V.amplitude_ = amplitude;
  V.width_ = cutoff_radius;
  V.wavenumber_ = wavenumber;
  V.refresh_cache();
  V.compute_cosine_constants();
  return V;
}

void Potential::refresh_cache() {
  if (family_ == Family::Gaussian) {
    gauss_c1_ = -scale_ * amplitude_ * length_ * length_ / (width_ * width_);
    gauss_c2_ = -length_ * length_ / (2.0 * width_ * width_);
  }
}

double Potential::value_s(double s) const {
  if (family_ == Family::Gaussian) {
    return scale_ * amplitude_ * std::exp(gauss_c2_ * s);
  }
  const double r = length_ * std::sqrt(s);
  const double R = width_;
  return scale_ * amplitude_ * std::cos(wavenumber_ * r) * std::exp(-r * r / (2.0 * R * R));
}

double Potential::cosine_grad_factor(double s) const {
  const double r = length_ * std::sqrt(s);
  const double R = width_;
  const double k = wavenumber_;
  const double kr = k * r;
  const double sinc = (kr == 0.0) ? 1.0 : std::sin(kr) / kr;
  const double gp_over_r =
      amplitude_ * std::exp(-r * r / (2.0 * R * R)) * (-k * k * sinc - std::cos(kr) / (R * R));
  return scale_ * length_ * length_ * gp_over_r;
}

double Potential::second_derivative1(double z) const {
  const double s = z * z;
  if (family_ == Family::Gaussian) {
    return gauss_c1_ * std::exp(gauss_c2_ * s) * (1.0 + 2.0 * gauss_c2_ * s);
  }
  const double r = length_ * std::abs(z);
  const double R = width_;
  const double k = wavenumber_;
  const double c = std::cos(k * r), sn = std::sin(k * r);
  const double E = std::exp(-r * r / (2.0 * R * R));
  const double g2 = amplitude_ * E *
                    (-k * k * c - c / (R * R) + 2.0 * r * k * sn / (R * R) + r * r * c / (R * R * R * R));
  return scale_ * length_ * length_ * g2;
}

void Potential::compute_cosine_constants() {
  // Radial grid maximization of |g'|, |g''| and |g'/r| for the unscaled profile.
  const double R = width_;
  const double k = wavenumber_;
  const double r_max = 12.0 * R;
  const int n = 200001;
  double max_g1 = 0.0, max_hess = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = r_max * i / (n - 1);
    const double c = std::cos(k * r), sn = std::sin(k * r);
    const double E = std::exp(-r * r / (2.0 * R * R));
    const double kr = k * r;
    const double sinc = (kr == 0.0) ? 1.0 : sn / kr;
    const double g1_over_r = E * (-k * k * sinc - c / (R * R));
    const double g1 = g1_over_r * r;
    const double g2 = E * (-k * k * c - c / (R * R) + 2.0 * r * k * sn / (R * R) + r * r * c / (R * R * R * R));
    max_g1 = std::max(max_g1, std::abs(g1));
    max_hess = std::max(max_hess, std::abs(g2));
    if (dim_ > 1) max_hess = std::max(max_hess, std::abs(g1_over_r));
  }
  const double A = std::abs(amplitude_ * scale_);
  sup_grad_ = A * length_ * max_g1 * (1.0 + kSampledSlack);
  lip_grad_ = A * length_ * length_ * max_hess * (1.0 + kSampledSlack);
  sup_abs_ = A;
}

double Potential::eval(std::span<const double> z) const {
  if (static_cast<int>(z.size()) != dim_) throw std::invalid_argument("potential eval: dimension mismatch");
  return value_s(norm2(z));
}

void Potential::grad(std::span<const double> z, std::span<double> out) const {
  if (static_cast<int>(z.size()) != dim_ || out.size() != z.size())
    throw std::invalid_argument("potential grad: dimension mismatch");
  const double f = grad_factor(norm2(z));
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = f * z[i];
}

Potential Potential::scaled(double c, double L) const {
  if (!(L > 0.0)) throw std::invalid_argument("potential scaling: length factor must be positive");
  Potential W = *this;
  W.scale_ = scale_ * c;
  W.length_ = length_ * L;
  W.refresh_cache();
  W.sup_grad_ = sup_grad_ * std::abs(c) * L;
  W.lip_grad_ = lip_grad_ * std::abs(c) * L * L;
  W.sup_abs_ = sup_abs_ * std::abs(c);
  return W;
}

Potential Potential::with_constants(double sup_grad, double lip_grad, double sup_abs) const {
  Potential W = *this;
  W.sup_grad_ = sup_grad;
  W.lip_grad_ = lip_grad;
  W.sup_abs_ = sup_abs;
  return W;
}

RescaleResult rescale(const ScalingInput& s, const Potential& V_phys) {
  if (!(s.hbar > 0.0) || !(s.mass > 0.0) || !(s.length_L > 0.0) || !(s.time_T > 0.0) || s.n_particles < 1)
    throw std::invalid_argument("rescale: all scaling inputs must be strictly positive");
  const double L2 = s.length_L * s.length_L;
  const double epsilon = s.hbar * s.time_T / (s.mass * L2);
  const double c = static_cast<double>(s.n_particles) * s.time_T * s.time_T / (s.mass * L2);
  return {epsilon, V_phys.scaled(c, s.length_L)};
}

Potential make_gaussian_potential(double amplitude, double width, int d) {
  return Potential::gaussian(amplitude, width, d);
}

ConstantsReport verify_constants(const Potential& V, int n_samples, double box, std::uint64_t seed) {
  if (n_samples < 2) throw std::invalid_argument("verify_constants: need at least two samples");
  if (!(box > 0.0)) throw std::invalid_argument("verify_constants: box must be positive");
  const int d = V.dim();
  CounterRng rng(seed);
  std::vector<double> z(d), zp(d), g(d), gp(d);
  ConstantsReport rep;
  rep.declared_sup_grad = V.sup_grad();
  rep.declared_lip_grad = V.lip_grad();
  std::vector<double> prev(d, 0.0);
  for (int i = 0; i < n_samples; ++i) {
    for (int a = 0; a < d; ++a) z[a] = rng.uniform(-0.5 * box, 0.5 * box);
    V.grad(z, g);
    double gn = 0.0;
    for (double v : g) gn += v * v;
    rep.observed_sup_grad = std::max(rep.observed_sup_grad, std::sqrt(gn));
    // Alternate between a nearby partner and the previous (typically distant) sample.
    if (i % 2 == 0) {
      const double h = rng.uniform(1e-6, 1e-2) * box;
      double un = 0.0;
      for (int a = 0; a < d; ++a) {
        zp[a] = rng.normal();
        un += zp[a] * zp[a];
      }
      un = std::sqrt(un);
      for (int a = 0; a < d; ++a) zp[a] = z[a] + h * zp[a] / un;
    } else {
      zp = prev;
    }
    V.grad(zp, gp);
    double dz = 0.0, dg = 0.0;
    for (int a = 0; a < d; ++a) {
      dz += (z[a] - zp[a]) * (z[a] - zp[a]);
      dg += (g[a] - gp[a]) * (g[a] - gp[a]);
    }
    if (dz > 0.0) rep.observed_lip_grad = std::max(rep.observed_lip_grad, std::sqrt(dg / dz));
    prev = z;
  }
  rep.sup_violation = rep.observed_sup_grad > rep.declared_sup_grad * (1.0 + 1e-9);
  rep.lip_violation = rep.observed_lip_grad > rep.declared_lip_grad * (1.0 + 1e-9);
  return rep;
}

}  // namespace mflab
