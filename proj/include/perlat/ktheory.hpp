#pragma once

#include <string>
#include <utility>
#include <vector>

#include "perlat/curve.hpp"
#include "perlat/gauss_field.hpp"

namespace perlat {

/// Default shell truncation: 15 in d = 3, 8 otherwise.
double default_truncation(int dim);

/// kappa at lag norm h: 2 sigma^2 - 2 c(h), the variance of one coordinate
/// of p_i - p_0.
double kappa(const CovarianceModel& model, double lag_norm);

/// Theoretical K of a perturbed lattice on r_grid.
///
/// Gaussian models: K(r) = sum over shells of Z^d \ {0} of
/// count * P_d(r^2 / kappa, |i|^2 / kappa), restricted to |i| <= r + q. Shells
/// with |i| < r - q lie deep inside the ball and contribute their full count.
/// The stationarized model returns the exact count #{i != 0 : |i| <= r}.
/// Throws NumericalError("perfectly correlated perturbations") when some
/// kappa in range is not positive.
SummaryCurve k_theoretical(const CovarianceModel& model, const std::vector<double>& r_grid, double q = -1.0);

/// L(r) - r with L = (K / omega_d)^{1/d}.
SummaryCurve l_centered_from_k(const SummaryCurve& k, int dim);

/// Number variance over ball volume of the stationarized lattice:
/// sum_{x in Z^d \ {0}} J_{d/2}(2 pi r |x|)^2 / (omega_d |x|^d).
///
/// The terms decay like |x|^{-d-1} without sign changes of their mean, so the
/// sum runs over a ball of fixed radius and the remainder is replaced by its
/// asymptotic mean d / (2 pi^2 r R).
double spectral_variance_stationarized(int dim, double r);

/// Same quantity for an independently perturbed lattice with iid centred
/// Gaussian displacements of per-coordinate standard deviation sigma:
/// 1 - int |phi|^2 j_r + sum_{x != 0} exp(-4 pi^2 sigma^2 |x|^2) J^2 / (omega_d |x|^d).
double spectral_variance_iid(const CovarianceModel& model, double r);

/// Decay check of |cov(p_0, p_i)| = O(|i|^{-g}) against the threshold g > 2d.
struct DecayReport {
  int dim = 3;
  double threshold = 6.0;        // 2d
  double fitted_exponent = 0.0;  // log-log slope over |i| in [5, 50]
  bool super_polynomial = false; // decays faster than any power
  bool finite_range = false;
  bool passes = false;
  std::string verdict;
  SummabilityReport summability;
};

DecayReport hyperuniformity_condition_report(const CovarianceModel& model);

/// Same test on a tabulated covariance (lag norm, |cov|), for models outside
/// the built-in families.
DecayReport decay_condition_from_table(int dim, const std::vector<std::pair<double, double>>& lag_cov);

}  // namespace perlat
