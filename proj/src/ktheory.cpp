#include "perlat/ktheory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "perlat/error.hpp"
#include "perlat/special.hpp"

namespace perlat {
namespace {

constexpr double kPi = std::numbers::pi;

// Radius of the dual-lattice ball summed before switching to the tail mean.
double dual_cutoff(int dim) {
  switch (dim) {
    case 1: return 1e6;
    case 2: return 1000.0;
    default: return 200.0;
  }
}

// sum over x in Z^d \ {0}, |x| <= radius, of f(|x|).
template <class F>
double dual_shell_sum(int dim, double radius, F f) {
  double sum = 0.0;
  if (dim == 1) {
    const auto n = static_cast<long>(std::floor(radius));
    for (long k = n; k >= 1; --k) sum += 2.0 * f(static_cast<double>(k));
    return sum;
  }
  const auto shells = integer_shells(dim, radius);
  // Smallest terms first.
  for (auto it = shells.rbegin(); it != shells.rend(); ++it) {
    sum += static_cast<double>(it->count) * f(std::sqrt(static_cast<double>(it->norm2)));
  }
  return sum;
}

double dual_term(int dim, double r, double x) {
  const double j = bessel_j(0.5 * dim, 2.0 * kPi * r * x);
  return j * j / (unit_ball_volume(dim) * std::pow(x, dim));
}

void check_radius(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("radius must be finite and > 0");
}

}  // namespace

double default_truncation(int dim) { return dim == 3 ? 15.0 : 8.0; }

double kappa(const CovarianceModel& model, double lag_norm) {
  switch (model.kind) {
    case ModelKind::stationarized: return 0.0;
    case ModelKind::iid_gauss: return lag_norm == 0.0 ? 0.0 : 2.0 * model.sigma * model.sigma;
    case ModelKind::powexp_gauss:
      if (lag_norm == 0.0) return 0.0;
      return -2.0 * model.sigma * model.sigma * std::expm1(-std::pow(lag_norm, model.gamma) / model.range);
  }
  return 0.0;
}

SummaryCurve k_theoretical(const CovarianceModel& model, const std::vector<double>& r_grid, double q) {
  model.validate();
  check_grid(r_grid);
  const int d = model.dim;
  if (q <= 0.0) q = default_truncation(d);
  if (!std::isfinite(q)) throw ConfigError("truncation q must be finite");

  SummaryCurve out;
  out.kind = CurveKind::K;
  out.r = r_grid;
  out.values.assign(r_grid.size(), 0.0);
  const double rmax = r_grid.back();
  const bool degenerate = model.kind == ModelKind::stationarized || model.sigma == 0.0;

  if (degenerate) {
    const auto shells = integer_shells(d, rmax);
    for (std::size_t g = 0; g < r_grid.size(); ++g) {
      const double r2 = r_grid[g] * r_grid[g];
      double count = 0.0;
      for (const auto& s : shells) {
        if (static_cast<double>(s.norm2) > r2 * (1.0 + 1e-14)) break;
        count += static_cast<double>(s.count);
      }
      out.values[g] = count;
    }
    return out;
  }

  const auto shells = integer_shells(d, rmax + q);
  std::vector<double> norms(shells.size()), kappas(shells.size());
  for (std::size_t s = 0; s < shells.size(); ++s) {
    norms[s] = std::sqrt(static_cast<double>(shells[s].norm2));
    kappas[s] = kappa(model, norms[s]);
    if (!(kappas[s] > 0.0)) throw NumericalError("perfectly correlated perturbations");
  }

  for (std::size_t g = 0; g < r_grid.size(); ++g) {
    const double r = r_grid[g];
    if (r == 0.0) continue;
    double sum = 0.0;
    for (std::size_t s = 0; s < shells.size(); ++s) {
      const double h = norms[s];
      if (h > r + q) break;
      const double c = static_cast<double>(shells[s].count);
      if (h < r - q) {
        sum += c;
        continue;
      }
      sum += c * noncentral_chisq_cdf(d, r * r / kappas[s], static_cast<double>(shells[s].norm2) / kappas[s]);
    }
    out.values[g] = sum;
  }
  for (std::size_t g = 1; g < out.values.size(); ++g) {
    if (out.values[g] < out.values[g - 1] - 1e-9 * std::max(1.0, out.values[g - 1])) {
      throw NumericalError("theoretical K is not monotone on the grid");
    }
  }
  return out;
}

SummaryCurve l_centered_from_k(const SummaryCurve& k, int dim) {
  check_dim(dim);
  if (k.kind != CurveKind::K) throw ConfigError("expected a K curve");
  k.validate();
  SummaryCurve out;
  out.kind = CurveKind::L_centered;
  out.r = k.r;
  out.values.resize(k.size());
  const double omega = unit_ball_volume(dim);
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k.values[i] < 0.0) throw ConfigError("negative K value");
    out.values[i] = std::pow(k.values[i] / omega, 1.0 / dim) - k.r[i];
  }
  return out;
}

double spectral_variance_stationarized(int dim, double r) {
  check_dim(dim);
  check_radius(r);
  const double cutoff = dual_cutoff(dim);
  const double sum = dual_shell_sum(dim, cutoff, [&](double x) { return dual_term(dim, r, x); });
  return sum + dim / (2.0 * kPi * kPi * r * cutoff);
}

double spectral_variance_iid(const CovarianceModel& model, double r) {
  model.validate();
  check_radius(r);
  const int d = model.dim;
  if (model.kind == ModelKind::stationarized || model.sigma == 0.0) return spectral_variance_stationarized(d, r);
  if (model.kind != ModelKind::iid_gauss) throw ConfigError("spectral variance formula needs an iid model");
  const double sigma = model.sigma;

  // 1 - int |phi|^2 j_r = d int_0^inf (1 - exp(-(sigma z / r)^2)) J_{d/2}(z)^2 / z dz.
  const double nu = 0.5 * d;
  const double s = sigma / r;
  auto integrand = [&](double z) {
    if (z == 0.0) return 0.0;
    const double j = bessel_j(nu, z);
    return -std::expm1(-(s * z) * (s * z)) * j * j / z;
  };
  const double zmax = std::max(4000.0, 7.0 / s);
  const auto panels = static_cast<long>(std::ceil(zmax / kPi));
  double integral = 0.0;
  for (long p = 0; p < panels; ++p) {
    integral += boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
        integrand, static_cast<double>(p) * kPi, static_cast<double>(p + 1) * kPi, 6, 1e-12);
  }
  const double upper = static_cast<double>(panels) * kPi;
  const double continuous = d * (integral + 1.0 / (kPi * upper));

  // Gaussian damping makes the dual sum negligible beyond exp(-4 pi^2 sigma^2 R^2) = e^{-40}.
  const double damped = std::sqrt(40.0) / (2.0 * kPi * sigma);
  const double cutoff = std::min(dual_cutoff(d), damped);
  double sum = dual_shell_sum(d, cutoff, [&](double x) {
    return std::exp(-4.0 * kPi * kPi * sigma * sigma * x * x) * dual_term(d, r, x);
  });
  if (cutoff < damped) sum += d / (2.0 * kPi * kPi * r * cutoff);
  return continuous + sum;
}

DecayReport decay_condition_from_table(int dim, const std::vector<std::pair<double, double>>& lag_cov) {
  check_dim(dim);
  DecayReport rep;
  rep.dim = dim;
  rep.threshold = 2.0 * dim;
  std::vector<double> lx, ly;
  bool any_nonzero = false;
  for (const auto& [h, c] : lag_cov) {
    if (h < 5.0 || h > 50.0) continue;
    const double a = std::fabs(c);
    if (a > 0.0) any_nonzero = true;
    if (a > 1e-300) {
      lx.push_back(std::log(h));
      ly.push_back(std::log(a));
    }
  }
  if (!any_nonzero) {
    rep.finite_range = true;
    rep.passes = true;
    rep.fitted_exponent = std::numeric_limits<double>::infinity();
    rep.verdict = "finite range: passes for every polynomial threshold";
    return rep;
  }
  auto slope_of = [](const std::vector<double>& x, const std::vector<double>& y, std::size_t a, std::size_t b) {
    double mx = 0, my = 0;
    for (std::size_t i = a; i < b; ++i) {
      mx += x[i];
      my += y[i];
    }
    const double n = static_cast<double>(b - a);
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = a; i < b; ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
  };
  if (lx.size() < 4) {
    // Underflowed inside [5, 50]: faster than any power.
    rep.super_polynomial = true;
    rep.passes = true;
    rep.fitted_exponent = std::numeric_limits<double>::infinity();
    rep.verdict = "super-polynomial decay: passes for every polynomial threshold";
    return rep;
  }
  rep.fitted_exponent = -slope_of(lx, ly, 0, lx.size());
  const std::size_t half = lx.size() / 2;
  const double early = -slope_of(lx, ly, 0, half);
  const double late = -slope_of(lx, ly, half, lx.size());
  rep.super_polynomial = late > 1.5 * early && late > rep.fitted_exponent && early > 0.0;
  rep.passes = rep.super_polynomial || rep.fitted_exponent > rep.threshold;
  rep.verdict = rep.passes ? (rep.super_polynomial ? "super-polynomial decay: passes" : "polynomial decay above 2d: passes")
                           : "decay exponent not above 2d: fails";
  return rep;
}

DecayReport hyperuniformity_condition_report(const CovarianceModel& model) {
  model.validate();
  const int d = model.dim;
  std::vector<std::pair<double, double>> table;
  for (const auto& s : integer_shells(d, 50.0)) {
    const double h = std::sqrt(static_cast<double>(s.norm2));
    if (h >= 5.0) table.emplace_back(h, d * model.per_coordinate(h));
  }
  DecayReport rep = decay_condition_from_table(d, table);
  if (model.kind == ModelKind::powexp_gauss && model.gamma > 0.0 && !rep.finite_range) {
    rep.super_polynomial = true;
    rep.passes = true;
    rep.verdict = "stretched-exponential decay: passes for every polynomial threshold";
  } else if (model.kind == ModelKind::powexp_gauss && model.gamma == 0.0 && model.sigma > 0.0) {
    rep.super_polynomial = false;
    rep.passes = false;
    rep.verdict = "covariance does not decay (gamma = 0): fails";
  }
  rep.summability = covariance_summability(model);
  return rep;
}

}  // namespace perlat
