#pragma once

#include "perlat/geometry.hpp"

namespace perlat {

/// Bessel function of the first kind J_order(z) for order in {0, 1/2, 1, 3/2, ...}
/// and z >= 0.
///
/// Half-integer orders use the trigonometric closed forms (with upward
/// recurrence) for z above max(2, order) and the power series below.
/// Integer orders use the power series, summed in extended precision, for
/// z <= max(20, order^2 / 2) and the Hankel asymptotic expansion beyond.
/// Throws ConfigError for negative z or an order that is not a multiple of 1/2.
double bessel_j(double order, double z);

/// J_nu(z) / z^nu, finite at z = 0 where it equals 1 / (2^nu Gamma(nu + 1)).
double bessel_j_scaled(double order, double z);

/// The kernel j_r(x) = J_{d/2}(r|x|)^2 / (omega_d |x|^d), omega_d the volume of
/// the unit d-ball. It has unit mass and its Fourier transform is the ball
/// self-convolution 1_{B_r} * 1_{B_r} / lambda(B_r).
struct KernelJr {
  int dim = 3;
  double r = 1.0;
};

/// j_r at any point of norm x_norm; the removable singularity at 0 is filled
/// by its limit (r/2)^d / (Gamma(d/2 + 1)^2 omega_d).
double jr_kernel(const KernelJr& k, double x_norm);

/// Fourier transform of j_r: lambda(B_r intersected with B_r + x) / lambda(B_r).
double jr_hat(const KernelJr& k, double x_norm);
double jr_hat(const KernelJr& k, const Point& x);

/// CDF of the non-central chi-squared law with `dof` degrees of freedom and
/// non-centrality `noncentrality`, evaluated at x. Absolute accuracy 1e-12.
double noncentral_chisq_cdf(int dof, double x, double noncentrality);

/// |phi(t)|^2 = exp(-sigma^2 t^2) for a centred isotropic Gaussian with
/// per-coordinate standard deviation sigma.
double gauss_charfn_sq(double sigma, double t_norm);

/// Standard normal CDF.
double normal_cdf(double z);

}  // namespace perlat
