#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "perlat/curve.hpp"
#include "perlat/gauss_field.hpp"

namespace perlat {

struct ContrastSpec {
  double r1 = 0.0;
  double r2 = 3.0;
  double transform_power = 0.25;
  /// l(r), the variance of the centred L-function; weight 1 / sqrt(max(l, 1e-12)).
  std::optional<SummaryCurve> weight;
  double grid_step = 0.02;
  double q = 15.0;  // shell truncation of the theoretical K

  void validate() const;
  /// r1, r1 + step, ..., with r2 appended when the last node falls short.
  std::vector<double> nodes() const;
};

/// D(theta) = trapezoid sum over [r1, r2] of w(r) |K_theta(r)^p - K_hat(r)^p|^2,
/// K_hat and l interpolated linearly onto the nodes.
double contrast(const CovarianceModel& model, const SummaryCurve& k_hat, const ContrastSpec& spec);

struct FitBounds {
  double sigma_lo = 1e-3, sigma_hi = 1.0;
  double range_lo = 0.1, range_hi = 10.0;
  double gamma_lo = 0.05, gamma_hi = 2.0;
};

struct TraceEntry {
  std::vector<double> theta;
  double value = 0.0;
};

struct FitResult {
  ModelKind model_kind = ModelKind::iid_gauss;
  CovarianceModel model;             // fitted model
  std::vector<double> theta_hat;     // (sigma) or (sigma, range, gamma)
  double contrast_value = 0.0;
  std::size_t n_evals = 0;
  bool converged = false;
  std::vector<TraceEntry> trace;
};

struct OptimizerOptions {
  std::size_t max_evals = 500;    // per start
  double tolerance = 1e-4;        // simplex diameter in transformed coordinates
  int restarts = 3;               // jittered restarts after the initial start
  double initial_step = 0.3;
};

/// Minimum-contrast fit by Nelder-Mead in (log sigma, log range, logit(gamma / 2)),
/// parameters clamped to the bounds. The start `init` provides the model kind,
/// dimension and initial parameters.
FitResult fit_min_contrast(const SummaryCurve& k_hat, const ContrastSpec& spec, const CovarianceModel& init,
                           const FitBounds& bounds = {}, const OptimizerOptions& options = {});

/// Pointwise sample variance of L_hat(r) - r across replicates (>= 20).
SummaryCurve empirical_l_variance(const std::vector<PointPattern>& batch, const std::vector<double>& r_grid);

struct TwoStageOptions {
  BoxWindow window;           // simulation window of the stage-2 replicates
  std::size_t n_sims = 100;
  SeedSpec seed;
  ContrastSpec stage2 = [] {
    ContrastSpec c;
    c.r1 = 0.2;
    c.r2 = 2.0;
    return c;
  }();
};

struct TwoStageResult {
  FitResult stage1;
  FitResult stage2;
  SummaryCurve l_variance;
};

/// Unweighted fit, then n_sims simulations at the stage-1 estimate give the
/// weight l(r) for a weighted refit started at the stage-1 estimate.
TwoStageResult fit_two_stage(const SummaryCurve& k_hat, const ContrastSpec& stage1, const CovarianceModel& init,
                             const TwoStageOptions& options, const FitBounds& bounds = {},
                             const OptimizerOptions& optimizer = {});

}  // namespace perlat
