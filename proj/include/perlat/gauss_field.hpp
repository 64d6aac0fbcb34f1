#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "perlat/geometry.hpp"

namespace perlat {

enum class ModelKind { stationarized, iid_gauss, powexp_gauss };

std::string to_string(ModelKind kind);
/// Accepts "stationarized", "iid" / "iid_gauss", "powexp" / "powexp_gauss".
ModelKind parse_model_kind(const std::string& name);

/// Stationary symmetric Gaussian perturbation field on Z^d with independent,
/// identically distributed coordinates. Per-coordinate covariance:
///   stationarized: c == 0
///   iid_gauss:     c(h) = sigma^2 1{h = 0}
///   powexp_gauss:  c(h) = sigma^2 exp(-|h|^gamma / range)
struct CovarianceModel {
  ModelKind kind = ModelKind::stationarized;
  double sigma = 0.0;
  double range = 1.0;
  double gamma = 2.0;
  int dim = 3;

  static CovarianceModel stationarized(int dim);
  static CovarianceModel iid(double sigma, int dim);
  static CovarianceModel powexp(double sigma, double range, double gamma, int dim);

  /// Throws ConfigError; gamma outside [0, 2] reports
  /// "positive definiteness violated".
  void validate() const;

  /// Per-coordinate covariance c(h) at lag norm h.
  double per_coordinate(double lag_norm) const;
  double variance() const { return kind == ModelKind::stationarized ? 0.0 : sigma * sigma; }
  bool is_gaussian() const { return kind != ModelKind::stationarized; }
};

/// cov(p_0, p_lag) = d * c(lag).
double covariance(const CovarianceModel& model, const Point& lag);

/// Inclusive integer box of lattice sites; sites are stored in row-major order
/// with the last axis fastest.
struct IntBox {
  int dim = 3;
  std::array<long, kMaxDim> lo{0, 0, 0};
  std::array<long, kMaxDim> hi{0, 0, 0};

  static IntBox cube(int dim, long lo, long hi);

  long side(int k) const { return hi[k] - lo[k] + 1; }
  std::size_t site_count() const;
  Point site(std::size_t index) const;
  void validate() const;
};

enum class SamplingMethod { zero, direct, circulant_fft, cholesky };
std::string to_string(SamplingMethod method);

struct FieldOptions {
  /// Padding per axis for the circulant embedding; <= 0 selects
  /// max(side, ceil(8 range)).
  long padding = 0;
  /// Largest number of sites for which a block may be simulated at all.
  std::size_t site_cap = 20'000'000;
  /// Largest block handled by the dense Cholesky fallback.
  std::size_t cholesky_cap = 4096;
  /// Largest torus (total number of cells) tried for circulant embedding.
  std::size_t torus_cap = std::size_t{1} << 24;
};

struct FieldBlock {
  IntBox block;
  std::vector<Point> values;  // displacement of each site, lattice units
  CovarianceModel model;
  SeedSpec seed;
  SamplingMethod method = SamplingMethod::zero;

  Point site(std::size_t index) const { return block.site(index); }
};

struct EmbeddingReport {
  double min_eigenvalue = 0.0;
  bool fft_ok = false;
  std::array<long, kMaxDim> torus{1, 1, 1};
  SamplingMethod method = SamplingMethod::circulant_fft;
};

/// Spectrum of the circulant embedding of a cubic block of `block_side` sites
/// per axis on a torus of side block_side + padding. fft_ok when the minimum
/// eigenvalue is >= -1e-10 sigma^2; otherwise the report points at Cholesky.
EmbeddingReport check_embedding(const CovarianceModel& model, long block_side, long padding);

/// Exact sampler for the field restricted to a fixed block. Precomputes the
/// embedding spectrum (or Cholesky factor) once so that repeated draws are
/// cheap; `sample` is const and may be called concurrently.
class GaussianFieldSampler {
 public:
  GaussianFieldSampler(const CovarianceModel& model, const IntBox& block, const FieldOptions& options = {});
  ~GaussianFieldSampler();
  GaussianFieldSampler(GaussianFieldSampler&&) noexcept;
  GaussianFieldSampler& operator=(GaussianFieldSampler&&) noexcept;

  SamplingMethod method() const;
  const EmbeddingReport& embedding() const;
  const IntBox& block() const;

  /// Draws one field; `out` is resized to block().site_count().
  void sample(Rng& rng, std::vector<Point>& out) const;
  FieldBlock sample(const SeedSpec& seed) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Zero-mean Gaussian field on `block` with per-coordinate covariance
/// U[i, j] = c(i - j): circulant embedding when nonnegative definite (padding
/// doubled up to three times), dense Cholesky with jitter <= 1e-10 sigma^2
/// otherwise. Throws NumericalError("covariance not embeddable at this size").
FieldBlock simulate_block(const CovarianceModel& model, const IntBox& block, const SeedSpec& seed,
                          const FieldOptions& options = {});

struct SummabilityReport {
  std::vector<double> radii;
  std::vector<double> partial_sums;  // sum_{|i| <= R} |cov(p_0, p_i)|
  bool converged = false;
  double converged_radius = 0.0;     // first R after which increments stay < 1e-8 relative
};

/// Partial sums of |cov(p_0, p_i)| over growing balls, up to max_radius.
SummabilityReport covariance_summability(const CovarianceModel& model, double max_radius = 60.0);

/// Version string of the FFT backend.
std::string fft_backend_version();

}  // namespace perlat
