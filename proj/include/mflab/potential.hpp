#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

namespace mflab {

// Even, radial interaction potential V(z) = amplitude_scale * g(length_scale * |z|).
//
// Two closed-form profiles are available:
//   gaussian:  g(r) = A exp(-r^2 / (2 w^2))
//   cosine:    g(r) = A cos(kappa r) exp(-r^2 / (2 R^2))   (cosine with a smooth cutoff)
// The gradient is evaluated as grad_factor(|z|^2) * z, which makes it exactly odd
// in floating point.
class Potential {
 public:
  enum class Family { Gaussian, Cosine };

  static Potential gaussian(double amplitude, double width, int d);
  static Potential cosine(double amplitude, double wavenumber, double cutoff_radius, int d);

  const std::string& name() const { return name_; }
  Family family() const { return family_; }
  int dim() const { return dim_; }
  double sup_grad() const { return sup_grad_; }
  double lip_grad() const { return lip_grad_; }
  double sup_abs() const { return sup_abs_; }

  // Profile parameters before rescaling.
  double amplitude() const { return amplitude_; }
  double width() const { return width_; }
  double wavenumber() const { return wavenumber_; }
  double amplitude_scale() const { return scale_; }
  double length_scale() const { return length_; }
  bool is_zero() const { return amplitude_ == 0.0 || scale_ == 0.0; }

  double eval(std::span<const double> z) const;
  void grad(std::span<const double> z, std::span<double> out) const;

  // V as a function of s = |z|^2.
  double value_s(double s) const;
  // grad V(z) = grad_factor(|z|^2) * z.
  double grad_factor(double s) const {
    if (family_ == Family::Gaussian) return gauss_c1_ * std::exp(gauss_c2_ * s);
    return cosine_grad_factor(s);
  }
  // One-dimensional conveniences (d = 1).
  double eval1(double z) const { return value_s(z * z); }
  double grad1(double z) const { return grad_factor(z * z) * z; }
  double second_derivative1(double z) const;

  // Returns the potential z -> c * V(L z), with constants rescaled exactly.
  Potential scaled(double c, double L) const;

  // Overrides the stored constants; used to audit verify_constants.
  Potential with_constants(double sup_grad, double lip_grad, double sup_abs) const;

 private:
  Potential() = default;
  double cosine_grad_factor(double s) const;
  void refresh_cache();
  void compute_cosine_constants();

  std::string name_;
  Family family_ = Family::Gaussian;
  int dim_ = 1;
  double amplitude_ = 0.0;
  double width_ = 1.0;       // Gaussian width or cosine cutoff radius
  double wavenumber_ = 0.0;  // cosine only
  double scale_ = 1.0;
  double length_ = 1.0;
  double sup_grad_ = 0.0;
  double lip_grad_ = 0.0;
  double sup_abs_ = 0.0;
  double gauss_c1_ = 0.0;  // coefficient of grad_factor for the Gaussian
  double gauss_c2_ = 0.0;  // exponent rate for the Gaussian
};

struct ScalingInput {
  double hbar = 1.0;
  double mass = 1.0;
  double length_L = 1.0;
  double time_T = 1.0;
  int n_particles = 1;
};

struct RescaleResult {
  double epsilon;
  Potential V_hat;
};

// Dimensionless scaling: epsilon = hbar T / (m L^2), V_hat(z) = (N T^2/(m L^2)) V(L z).
RescaleResult rescale(const ScalingInput& s, const Potential& V_phys);

Potential make_gaussian_potential(double amplitude, double width, int d);

struct ConstantsReport {
  double observed_sup_grad = 0.0;
  double observed_lip_grad = 0.0;
  double declared_sup_grad = 0.0;
  double declared_lip_grad = 0.0;
  bool sup_violation = false;
  bool lip_violation = false;
  bool violation() const { return sup_violation || lip_violation; }
};

// Samples |grad V| and difference quotients of grad V on [-box/2, box/2]^d.
ConstantsReport verify_constants(const Potential& V, int n_samples, double box, std::uint64_t seed);

}  // namespace mflab
