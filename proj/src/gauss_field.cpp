#include "perlat/gauss_field.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <random>

#include <fftw3.h>

#include "perlat/error.hpp"

namespace perlat {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::stationarized: return "stationarized";
    case ModelKind::iid_gauss: return "iid";
    case ModelKind::powexp_gauss: return "powexp";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "stationarized") return ModelKind::stationarized;
  if (name == "iid" || name == "iid_gauss") return ModelKind::iid_gauss;
  if (name == "powexp" || name == "powexp_gauss") return ModelKind::powexp_gauss;
  throw ConfigError("unknown model kind '" + name + "'");
}

std::string fft_backend_version() { return fftw_version; }

std::string to_string(SamplingMethod method) {
  switch (method) {
    case SamplingMethod::zero: return "zero";
    case SamplingMethod::direct: return "direct";
    case SamplingMethod::circulant_fft: return "circulant_fft";
    case SamplingMethod::cholesky: return "cholesky";
  }
  return "unknown";
}

CovarianceModel CovarianceModel::stationarized(int dim) {
  CovarianceModel m;
  m.kind = ModelKind::stationarized;
  m.dim = dim;
  m.validate();
  return m;
}

CovarianceModel CovarianceModel::iid(double sigma, int dim) {
  CovarianceModel m;
  m.kind = ModelKind::iid_gauss;
  m.sigma = sigma;
  m.dim = dim;
  m.validate();
  return m;
}

CovarianceModel CovarianceModel::powexp(double sigma, double range, double gamma, int dim) {
  CovarianceModel m;
  m.kind = ModelKind::powexp_gauss;
  m.sigma = sigma;
  m.range = range;
  m.gamma = gamma;
  m.dim = dim;
  m.validate();
  return m;
}

void CovarianceModel::validate() const {
  check_dim(dim);
  if (kind == ModelKind::stationarized) return;
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be finite and >= 0");
  if (kind == ModelKind::powexp_gauss) {
    if (!(range > 0.0) || !std::isfinite(range)) throw ConfigError("range must be finite and > 0");
    if (!(gamma >= 0.0 && gamma <= 2.0)) throw ConfigError("positive definiteness violated: gamma must lie in [0, 2]");
  }
}

double CovarianceModel::per_coordinate(double lag_norm) const {
  switch (kind) {
    case ModelKind::stationarized: return 0.0;
    case ModelKind::iid_gauss: return lag_norm == 0.0 ? sigma * sigma : 0.0;
    case ModelKind::powexp_gauss:
      if (lag_norm == 0.0) return sigma * sigma;
      return sigma * sigma * std::exp(-std::pow(lag_norm, gamma) / range);
  }
  return 0.0;
}

double covariance(const CovarianceModel& model, const Point& lag) {
  return model.dim * model.per_coordinate(norm(lag, model.dim));
}

IntBox IntBox::cube(int dim, long lo, long hi) {
  IntBox b;
  b.dim = dim;
  for (int k = 0; k < dim; ++k) {
    b.lo[k] = lo;
    b.hi[k] = hi;
  }
  b.validate();
  return b;
}

std::size_t IntBox::site_count() const {
  std::size_t n = 1;
  for (int k = 0; k < dim; ++k) n *= static_cast<std::size_t>(side(k));
  return n;
}

Point IntBox::site(std::size_t index) const {
  Point p{};
  for (int k = dim - 1; k >= 0; --k) {
    const auto s = static_cast<std::size_t>(side(k));
    p[k] = static_cast<double>(lo[k] + static_cast<long>(index % s));
    index /= s;
  }
  return p;
}

void IntBox::validate() const {
  check_dim(dim);
  for (int k = 0; k < dim; ++k) {
    if (hi[k] < lo[k]) throw ConfigError("empty site block");
  }
}

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

long next_fft_size(long n) {
  for (long m = std::max(1L, n);; ++m) {
    long r = m;
    for (long f : {2L, 3L, 5L, 7L}) {
      while (r % f == 0) r /= f;
    }
    if (r == 1) return m;
  }
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)), size(n) {
    if (data == nullptr) throw NumericalError("FFT buffer allocation failed");
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
  std::size_t size;
};

struct FftwPlan {
  FftwPlan(const std::array<long, kMaxDim>& torus, int dim) {
    std::array<int, kMaxDim> n{};
    std::size_t total = 1;
    for (int k = 0; k < dim; ++k) {
      n[k] = static_cast<int>(torus[k]);
      total *= static_cast<std::size_t>(torus[k]);
    }
    FftwBuffer scratch(total);
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft(dim, n.data(), scratch.data, scratch.data, FFTW_FORWARD, FFTW_ESTIMATE);
    if (plan == nullptr) throw NumericalError("FFT planning failed");
  }
  ~FftwPlan() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  void execute(FftwBuffer& buf) const { fftw_execute_dft(plan, buf.data, buf.data); }
  fftw_plan plan;
};

std::size_t torus_total(const std::array<long, kMaxDim>& torus, int dim) {
  std::size_t t = 1;
  for (int k = 0; k < dim; ++k) t *= static_cast<std::size_t>(torus[k]);
  return t;
}

// Eigenvalues of the circulant matrix whose first row is the wrapped
// per-coordinate covariance on the torus.
std::vector<double> embedding_spectrum(const CovarianceModel& model, const std::array<long, kMaxDim>& torus) {
  const int d = model.dim;
  const std::size_t total = torus_total(torus, d);
  FftwBuffer buf(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    double h2 = 0.0;
    for (int k = d - 1; k >= 0; --k) {
      const auto m = static_cast<std::size_t>(torus[k]);
      const auto j = static_cast<long>(rest % m);
      rest /= m;
      const long lag = std::min(j, torus[k] - j);
      h2 += static_cast<double>(lag) * static_cast<double>(lag);
    }
    buf.data[idx][0] = model.per_coordinate(std::sqrt(h2));
    buf.data[idx][1] = 0.0;
  }
  FftwPlan plan(torus, d);
  plan.execute(buf);
  std::vector<double> eig(total);
  for (std::size_t i = 0; i < total; ++i) eig[i] = buf.data[i][0];
  return eig;
}

double embedding_tolerance(const CovarianceModel& model) { return -1e-10 * std::max(model.variance(), 1e-300); }

}  // namespace

EmbeddingReport check_embedding(const CovarianceModel& model, long block_side, long padding) {
  model.validate();
  if (block_side < 1 || padding < 0) throw ConfigError("block side must be >= 1 and padding >= 0");
  EmbeddingReport rep;
  for (int k = 0; k < model.dim; ++k) rep.torus[k] = block_side + padding;
  if (model.kind == ModelKind::stationarized) {
    rep.min_eigenvalue = 0.0;
    rep.fft_ok = true;
    rep.method = SamplingMethod::zero;
    return rep;
  }
  const auto eig = embedding_spectrum(model, rep.torus);
  rep.min_eigenvalue = *std::min_element(eig.begin(), eig.end());
  rep.fft_ok = rep.min_eigenvalue >= embedding_tolerance(model);
  rep.method = rep.fft_ok ? SamplingMethod::circulant_fft : SamplingMethod::cholesky;
  return rep;
}

struct GaussianFieldSampler::Impl {
  CovarianceModel model;
  IntBox block;
  EmbeddingReport report;
  std::vector<double> sqrt_eig;  // sqrt(max(lambda, 0) / M)
  std::unique_ptr<FftwPlan> plan;
  Eigen::MatrixXd chol;          // lower factor, Cholesky path only
};

GaussianFieldSampler::GaussianFieldSampler(const CovarianceModel& model, const IntBox& block,
                                           const FieldOptions& options)
    : impl_(std::make_unique<Impl>()) {
  model.validate();
  block.validate();
  if (block.dim != model.dim) throw ConfigError("block and model dimensions differ");
  const std::size_t n = block.site_count();
  if (n > options.site_cap) throw NumericalError("site block exceeds the configured cap");
  impl_->model = model;
  impl_->block = block;
  auto& rep = impl_->report;
  const int d = model.dim;

  if (model.kind == ModelKind::stationarized || model.sigma == 0.0) {
    rep.method = SamplingMethod::zero;
    rep.fft_ok = true;
    return;
  }
  if (model.kind == ModelKind::iid_gauss) {
    rep.method = SamplingMethod::direct;
    rep.min_eigenvalue = model.variance();
    rep.fft_ok = true;
    return;
  }

  std::array<long, kMaxDim> pad{0, 0, 0};
  for (int k = 0; k < d; ++k) {
    pad[k] = options.padding > 0 ? options.padding
                                 : std::max(block.side(k), static_cast<long>(std::ceil(8.0 * model.range)));
  }
  for (int attempt = 0; attempt < 4; ++attempt) {
    std::array<long, kMaxDim> torus{1, 1, 1};
    for (int k = 0; k < d; ++k) torus[k] = next_fft_size(block.side(k) + (pad[k] << attempt));
    if (torus_total(torus, d) > options.torus_cap) break;
    auto eig = embedding_spectrum(model, torus);
    const double min_eig = *std::min_element(eig.begin(), eig.end());
    rep.torus = torus;
    rep.min_eigenvalue = min_eig;
    if (min_eig >= embedding_tolerance(model)) {
      rep.fft_ok = true;
      rep.method = SamplingMethod::circulant_fft;
      const double total = static_cast<double>(eig.size());
      impl_->sqrt_eig.resize(eig.size());
      for (std::size_t i = 0; i < eig.size(); ++i) impl_->sqrt_eig[i] = std::sqrt(std::max(eig[i], 0.0) / total);
      impl_->plan = std::make_unique<FftwPlan>(torus, d);
      return;
    }
  }

  if (n > options.cholesky_cap) throw NumericalError("covariance not embeddable at this size");
  rep.fft_ok = false;
  rep.method = SamplingMethod::cholesky;
  Eigen::MatrixXd cov(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point si = block.site(i);
    for (std::size_t j = i; j < n; ++j) {
      const Point sj = block.site(j);
      const double c = model.per_coordinate(distance(si, sj, d));
      cov(i, j) = c;
      cov(j, i) = c;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += 1e-10 * model.variance();
    llt.compute(cov);
    if (llt.info() != Eigen::Success) throw NumericalError("covariance not embeddable at this size");
  }
  impl_->chol = llt.matrixL();
}

GaussianFieldSampler::~GaussianFieldSampler() = default;
GaussianFieldSampler::GaussianFieldSampler(GaussianFieldSampler&&) noexcept = default;
GaussianFieldSampler& GaussianFieldSampler::operator=(GaussianFieldSampler&&) noexcept = default;

SamplingMethod GaussianFieldSampler::method() const { return impl_->report.method; }
const EmbeddingReport& GaussianFieldSampler::embedding() const { return impl_->report; }
const IntBox& GaussianFieldSampler::block() const { return impl_->block; }

void GaussianFieldSampler::sample(Rng& rng, std::vector<Point>& out) const {
  const auto& block = impl_->block;
  const int d = impl_->model.dim;
  const std::size_t n = block.site_count();
  out.assign(n, Point{});
  std::normal_distribution<double> normal(0.0, 1.0);

  switch (impl_->report.method) {
    case SamplingMethod::zero:
      return;
    case SamplingMethod::direct: {
      const double s = impl_->model.sigma;
      for (auto& v : out) {
        for (int k = 0; k < d; ++k) v[k] = s * normal(rng);
      }
      return;
    }
    case SamplingMethod::cholesky: {
      Eigen::VectorXd xi(static_cast<Eigen::Index>(n));
      for (int k = 0; k < d; ++k) {
        for (std::size_t i = 0; i < n; ++i) xi(static_cast<Eigen::Index>(i)) = normal(rng);
        const Eigen::VectorXd f = impl_->chol * xi;
        for (std::size_t i = 0; i < n; ++i) out[i][k] = f(static_cast<Eigen::Index>(i));
      }
      return;
    }
    case SamplingMethod::circulant_fft: {
      const auto& torus = impl_->report.torus;
      const std::size_t total = impl_->sqrt_eig.size();
      FftwBuffer buf(total);
      // One complex FFT yields two independent real fields (real and imaginary parts).
      for (int k = 0; k < d; k += 2) {
        for (std::size_t i = 0; i < total; ++i) {
          const double a = normal(rng);
          const double b = normal(rng);
          buf.data[i][0] = impl_->sqrt_eig[i] * a;
          buf.data[i][1] = impl_->sqrt_eig[i] * b;
        }
        impl_->plan->execute(buf);
        for (std::size_t i = 0; i < n; ++i) {
          // Site i of the block sits at the same multi-index on the torus.
          std::size_t rest = i;
          std::size_t tidx = 0;
          std::size_t stride = 1;
          for (int a = d - 1; a >= 0; --a) {
            const auto s = static_cast<std::size_t>(block.side(a));
            tidx += (rest % s) * stride;
            rest /= s;
            stride *= static_cast<std::size_t>(torus[a]);
          }
          out[i][k] = buf.data[tidx][0];
          if (k + 1 < d) out[i][k + 1] = buf.data[tidx][1];
        }
      }
      return;
    }
  }
}

FieldBlock GaussianFieldSampler::sample(const SeedSpec& seed) const {
  FieldBlock fb;
  fb.block = impl_->block;
  fb.model = impl_->model;
  fb.seed = seed;
  fb.method = impl_->report.method;
  Rng rng = make_rng(seed);
  sample(rng, fb.values);
  return fb;
}

FieldBlock simulate_block(const CovarianceModel& model, const IntBox& block, const SeedSpec& seed,
                          const FieldOptions& options) {
  return GaussianFieldSampler(model, block, options).sample(seed);
}

SummabilityReport covariance_summability(const CovarianceModel& model, double max_radius) {
  model.validate();
  SummabilityReport rep;
  double sum = std::fabs(model.dim * model.per_coordinate(0.0));
  rep.radii.push_back(0.0);
  rep.partial_sums.push_back(sum);
  bool quiet = false;
  double quiet_since = 0.0;
  for (const auto& shell : integer_shells(model.dim, max_radius)) {
    const double h = std::sqrt(static_cast<double>(shell.norm2));
    const double inc = static_cast<double>(shell.count) * std::fabs(model.dim * model.per_coordinate(h));
    sum += inc;
    rep.radii.push_back(h);
    rep.partial_sums.push_back(sum);
    const bool small = sum == 0.0 || inc <= 1e-8 * sum;
    if (small && !quiet) {
      quiet = true;
      quiet_since = h;
    } else if (!small) {
      quiet = false;
    }
  }
  // Require the tail to have stayed quiet over at least the last third of the range.
  rep.converged = quiet && quiet_since <= (2.0 / 3.0) * max_radius;
  rep.converged_radius = rep.converged ? quiet_since : 0.0;
  return rep;
}

}  // namespace perlat
