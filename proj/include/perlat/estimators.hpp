#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "perlat/curve.hpp"
#include "perlat/geometry.hpp"

namespace perlat {

/// Isotropic scaling about the window centre to one point per unit volume;
/// the result is centred at the origin.
PointPattern rescale_to_unit_intensity(const PointPattern& p);

/// Translation-corrected Ripley K:
///   K(r) = V / n^2 * sum_{x != y} 1{|x - y| <= r} * V / prod_k (L_k - |x_k - y_k|)
/// i.e. rho^2 is estimated by (n / V)^2. Requires max(r) < half the shortest side.
SummaryCurve k_empirical(const PointPattern& p, const std::vector<double>& r_grid);

/// Pair correlation function with an Epanechnikov kernel of half-width
/// `bandwidth` and translation edge correction. Negative bandwidth selects
/// 0.15 rho^{-1/d}. Returns 0 at r = 0.
SummaryCurve pcf_empirical(const PointPattern& p, const std::vector<double>& r_grid, double bandwidth = -1.0);

double default_pcf_bandwidth(const PointPattern& p);

/// Nearest-neighbour distance CDF, border method: only points at distance
/// >= max(r_grid) from the boundary are counted.
SummaryCurve g_nearest_neighbor(const PointPattern& p, const std::vector<double>& r_grid);

/// Disjoint axis-aligned boxes of side `side` separated by `gap`, the grid
/// centred in the window.
struct BoxGrid {
  std::array<long, kMaxDim> per_axis{1, 1, 1};
  std::vector<BoxWindow> boxes;
};

BoxGrid box_grid(const BoxWindow& window, double side, double gap);

struct BoxCounts {
  BoxGrid grid;
  std::vector<double> counts;
  double mean = 0.0;
  double variance = 0.0;       // sample variance (n - 1 denominator)
  double sigma_hat = 0.0;      // variance / box volume
};

/// Counts in the disjoint-box design. Throws ConfigError when fewer than 8
/// boxes fit.
BoxCounts number_variance_boxes(const PointPattern& p, double side = 2.7, double gap = 1.5);

/// Across-replicate variance of counts in B(centre, r) divided by the ball
/// volume. The centre defaults to the window centre; the ball must fit in
/// every window. Needs at least 30 replicates.
SummaryCurve number_variance_batch(const std::vector<PointPattern>& batch, const std::vector<double>& radii,
                                   std::optional<Point> center = std::nullopt);

struct ScatteringSpectrum {
  int dim = 3;
  std::vector<Point> wavevectors;   // 2 pi z / L, z != 0
  std::vector<double> norms;
  std::vector<double> intensities;  // |sum_j exp(-i k . x_j)|^2 / n
  std::size_t pattern_count = 1;
};

enum class Taper { none, sine };

/// Scattering intensity on every allowed mode with |k| <= k_cutoff.
/// Taper::none is |sum_j exp(-i k . x_j)|^2 / n. Taper::sine weights points by
/// the first-order sine taper h of the box (int h^2 = 1) and removes the mean:
/// |sum_j h(x_j) exp(-i k . x_j) - rho H(k)|^2 / rho, H the transform of h.
ScatteringSpectrum scattering_intensity(const PointPattern& p, double k_cutoff = 3.0, Taper taper = Taper::none);

/// Mode-wise mean over spectra computed on identical windows.
ScatteringSpectrum pool_spectra(const std::vector<ScatteringSpectrum>& spectra);

struct RadialSpectrum {
  std::vector<double> bin_lo, bin_hi;
  std::vector<double> k_mean;    // mean |k| of the modes in the bin
  std::vector<double> s_mean;    // mean intensity
  std::vector<std::size_t> modes;
};

/// Equal-width bins over (0, k_max]; empty bins are dropped.
RadialSpectrum radial_bins(const ScatteringSpectrum& spec, double k_max, int n_bins);

struct ExponentFit {
  double alpha_hat = 0.0;
  double intercept = 0.0;
  double k_max = 0.0;
  double stderr_alpha = 0.0;
  std::size_t bins_used = 0;
};

/// Least-squares slope of log S vs log |k| over the radial bins in (0, k_max].
/// Needs at least 8 nonempty bins.
ExponentFit exponent_fit(const ScatteringSpectrum& spec, double k_max = 1.5, int n_bins = 12);

/// Interpoint displacements x_j - x_i (both orientations) projected onto the
/// plane (axes[0], axes[1]); in d = 3 only pairs whose remaining coordinate
/// differs by at most slab_halfwidth are kept. Optional cap on the planar norm.
std::vector<std::array<double, 2>> fry_slab(const PointPattern& p, std::array<int, 2> axes, double slab_halfwidth,
                                            std::optional<double> max_norm = std::nullopt);

struct Histogram {
  std::vector<double> lo, hi;
  std::vector<double> counts;
};

/// Angles in [0, 2 pi) of the nearest-neighbour vectors projected onto the
/// plane (axes[0], axes[1]). Vectors with a vanishing projection are skipped.
Histogram nn_angle_histogram(const PointPattern& p, std::array<int, 2> axes, int bins);

/// Histogram of angles of planar vectors, equal bins on [0, 2 pi).
Histogram angle_histogram(const std::vector<std::array<double, 2>>& vectors, int bins);

}  // namespace perlat
