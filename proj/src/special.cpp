#include "perlat/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "perlat/error.hpp"

namespace perlat {
namespace {

constexpr double kPi = std::numbers::pi;

bool is_half_integer(double order) {
  const double twice = 2.0 * order;
  return std::fmod(twice, 2.0) == 1.0;
}

void check_order(double order) {
  const double twice = 2.0 * order;
  if (!(order >= 0.0) || twice != std::floor(twice)) {
    throw ConfigError("Bessel order must be a nonnegative multiple of 1/2");
  }
}

// sum_k (-1)^k (z/2)^{2k} / (k! Gamma(k + nu + 1)), i.e. J_nu(z) / (z/2)^nu.
long double bessel_series_reduced(double order, double z) {
  const long double nu = order;
  const long double q = 0.25L * static_cast<long double>(z) * z;
  long double term = 1.0L / std::tgamma(nu + 1.0L);
  long double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= -q / (static_cast<long double>(k) * (k + nu));
    sum += term;
    if (std::fabs(term) <= 1e-21L * std::fabs(sum)) break;
  }
  return sum;
}

double bessel_series(double order, double z) {
  const long double scale = std::pow(0.5L * static_cast<long double>(z), static_cast<long double>(order));
  return static_cast<double>(scale * bessel_series_reduced(order, z));
}

// J_{n+1/2} from the closed forms of J_{1/2} and J_{-1/2}; stable for z > order.
double bessel_half_integer(double order, double z) {
  const double pref = std::sqrt(2.0 / (kPi * z));
  double jm = pref * std::cos(z);  // J_{-1/2}
  double j = pref * std::sin(z);   // J_{1/2}
  for (double nu = 0.5; nu < order; nu += 1.0) {
    const double next = (2.0 * nu / z) * j - jm;
    jm = j;
    j = next;
  }
  return j;
}

// Hankel asymptotic expansion, summed until the terms stop decreasing.
double bessel_hankel(double order, double z) {
  const double mu = 4.0 * order * order;
  double p = 0.0, q = 0.0;
  double a = 1.0;  // a_k / z^k
  double last = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 200; ++k) {
    if (k > 0) {
      const double odd = 2.0 * k - 1.0;
      a *= (mu - odd * odd) / (k * 8.0 * z);
    }
    const double mag = std::fabs(a);
    if (mag > last) break;
    last = mag;
    const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 0) {
      p += sign * a;
    } else {
      q += sign * a;
    }
    if (mag < 1e-17 * std::fabs(p)) break;
  }
  const double chi = z - (0.5 * order + 0.25) * kPi;
  return std::sqrt(2.0 / (kPi * z)) * (p * std::cos(chi) - q * std::sin(chi));
}

double log_chisq_tail_bound(int dof, double t) {
  // Chernoff: P(chi2_d >= t) <= (t/d)^{d/2} exp(-(t - d)/2) for t > d.
  const double d = dof;
  if (t <= d) return 0.0;
  return 0.5 * d * std::log(t / d) - 0.5 * (t - d);
}

constexpr double kLogNegligible = -39.1;  // log(1e-17)

}  // namespace

double bessel_j(double order, double z) {
  check_order(order);
  if (!(z >= 0.0) || !std::isfinite(z)) throw ConfigError("Bessel argument must be finite and >= 0");
  if (z == 0.0) return order == 0.0 ? 1.0 : 0.0;
  if (is_half_integer(order)) {
    if (z <= std::max(2.0, order)) return bessel_series(order, z);
    return bessel_half_integer(order, z);
  }
  if (z <= std::max(20.0, 0.5 * order * order)) return bessel_series(order, z);
  return bessel_hankel(order, z);
}

double bessel_j_scaled(double order, double z) {
  check_order(order);
  if (!(z >= 0.0) || !std::isfinite(z)) throw ConfigError("Bessel argument must be finite and >= 0");
  if (z <= std::max(2.0, order)) {
    return static_cast<double>(bessel_series_reduced(order, z) / std::pow(2.0L, static_cast<long double>(order)));
  }
  return bessel_j(order, z) / std::pow(z, order);
}

double jr_kernel(const KernelJr& k, double x_norm) {
  check_dim(k.dim);
  if (!(k.r > 0.0)) throw ConfigError("kernel radius must be positive");
  if (!(x_norm >= 0.0)) throw ConfigError("kernel argument must be >= 0");
  const double nu = 0.5 * k.dim;
  const double s = bessel_j_scaled(nu, k.r * x_norm);
  return std::pow(k.r, k.dim) * s * s / unit_ball_volume(k.dim);
}

double jr_hat(const KernelJr& k, double x_norm) {
  check_dim(k.dim);
  if (!(k.r > 0.0)) throw ConfigError("kernel radius must be positive");
  const double h = std::fabs(x_norm);
  const double r = k.r;
  if (h >= 2.0 * r) return 0.0;
  switch (k.dim) {
    case 1:
      return 1.0 - h / (2.0 * r);
    case 2: {
      const double lens = 2.0 * r * r * std::acos(h / (2.0 * r)) - 0.5 * h * std::sqrt(4.0 * r * r - h * h);
      return lens / (kPi * r * r);
    }
    default: {
      const double u = h / r;
      return 1.0 - 0.75 * u + u * u * u / 16.0;
    }
  }
}

double jr_hat(const KernelJr& k, const Point& x) { return jr_hat(k, norm(x, k.dim)); }

double noncentral_chisq_cdf(int dof, double x, double noncentrality) {
  if (dof <= 0) throw ConfigError("degrees of freedom must be positive");
  if (!(noncentrality >= 0.0)) throw ConfigError("non-centrality must be >= 0");
  if (std::isnan(x)) throw ConfigError("non-central chi-squared argument is NaN");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double a0 = 0.5 * dof;
  const double y = 0.5 * x;
  if (noncentrality == 0.0) return boost::math::gamma_p(a0, y);

  // |Z| >= |mu| - |Z - mu|, so far from the transition the CDF is 0 or 1 to
  // within 1e-17.
  const double sx = std::sqrt(x);
  const double se = std::sqrt(noncentrality);
  const double gap = (se - sx) * (se - sx);
  if (log_chisq_tail_bound(dof, gap) < kLogNegligible) return se > sx ? 0.0 : 1.0;

  // Poisson(lambda) mixture of central chi-squared CDFs P(a0 + k, y), summed
  // outward from the Poisson mode using the recurrences
  //   P(a + 1, y) = P(a, y) - y^a e^{-y} / Gamma(a + 1).
  const double lambda = 0.5 * noncentrality;
  const double k0 = std::floor(lambda);
  const double w0 = std::exp(-lambda + k0 * std::log(lambda) - std::lgamma(k0 + 1.0));
  const double p0 = boost::math::gamma_p(a0 + k0, y);
  const double log_y = std::log(y);
  // y^a e^{-y} / Gamma(a + 1) at a = a0 + k0.
  const double d0 = std::exp((a0 + k0) * log_y - y - std::lgamma(a0 + k0 + 1.0));

  double sum = w0 * p0;
  constexpr double kTol = 1e-17;

  // Upward in k.
  {
    double w = w0, p = p0, dterm = d0;
    for (double k = k0 + 1.0;; k += 1.0) {
      w *= lambda / k;
      p -= dterm;
      if (p < 0.0) p = 0.0;
      dterm *= y / (a0 + k);
      sum += w * p;
      const double ratio = lambda / (k + 1.0);
      if (ratio < 1.0 && w * ratio / (1.0 - ratio) < kTol) break;
      if (w == 0.0) break;
    }
  }
  // Downward in k.
  if (k0 > 0.0) {
    double w = w0, p = p0;
    // y^{a-1} e^{-y} / Gamma(a) at a = a0 + k0.
    double dterm = d0 * (a0 + k0) / y;
    for (double k = k0 - 1.0; k >= 0.0; k -= 1.0) {
      w *= (k + 1.0) / lambda;
      p += dterm;
      if (p > 1.0) p = 1.0;
      dterm *= (a0 + k) / y;
      sum += w * p;
      const double ratio = k / lambda;
      if (ratio < 1.0 && w * ratio / (1.0 - ratio) < kTol) break;
    }
  }
  if (sum < 0.0) return 0.0;
  if (sum > 1.0) return 1.0;
  return sum;
}

double gauss_charfn_sq(double sigma, double t_norm) {
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  return std::exp(-sigma * sigma * t_norm * t_norm);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace perlat
