#include "perlat/fit.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "perlat/error.hpp"
#include "perlat/estimators.hpp"
#include "perlat/ktheory.hpp"
#include "perlat/lattice_sim.hpp"

namespace perlat {

void ContrastSpec::validate() const {
  if (!(r1 >= 0.0) || !(r2 > r1) || !std::isfinite(r2)) throw ConfigError("contrast needs 0 <= r1 < r2");
  if (!(grid_step > 0.0)) throw ConfigError("contrast grid step must be positive");
  if (!(transform_power > 0.0)) throw ConfigError("transform power must be positive");
  if (!(q > 0.0)) throw ConfigError("truncation q must be positive");
  if (weight) {
    weight->validate();
    for (double v : weight->values) {
      if (v < 0.0) throw ConfigError("weight curve values must be >= 0");
    }
  }
}

std::vector<double> ContrastSpec::nodes() const {
  std::vector<double> out = linear_grid(r1, r2, grid_step);
  if (out.back() < r2 - 1e-9 * grid_step) out.push_back(r2);
  return out;
}

double contrast(const CovarianceModel& model, const SummaryCurve& k_hat, const ContrastSpec& spec) {
  spec.validate();
  if (k_hat.kind != CurveKind::K) throw ConfigError("contrast needs an empirical K curve");
  k_hat.validate();
  const auto nodes = spec.nodes();
  if (k_hat.r.front() > spec.r1 + 1e-12 || k_hat.r.back() < spec.r2 - 1e-12) {
    throw ConfigError("empirical K grid does not cover [r1, r2]");
  }
  if (spec.weight && (spec.weight->r.front() > spec.r1 + 1e-12 || spec.weight->r.back() < spec.r2 - 1e-12)) {
    throw ConfigError("weight grid does not cover [r1, r2]");
  }
  for (double v : k_hat.values) {
    if (v < 0.0) throw ConfigError("negative empirical K value");
  }
  const SummaryCurve k_theta = k_theoretical(model, nodes, spec.q);
  const double p = spec.transform_power;
  std::vector<double> f(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double kh = interpolate(k_hat, nodes[i]);
    const double diff = std::pow(k_theta.values[i], p) - std::pow(kh, p);
    double w = 1.0;
    if (spec.weight) w = 1.0 / std::sqrt(std::max(interpolate(*spec.weight, nodes[i]), 1e-12));
    f[i] = w * diff * diff;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) sum += 0.5 * (nodes[i + 1] - nodes[i]) * (f[i] + f[i + 1]);
  return sum;
}

namespace {

struct Parametrization {
  ModelKind kind;
  int dim;
  FitBounds bounds;

  std::size_t size() const { return kind == ModelKind::powexp_gauss ? 3 : 1; }

  static double logit(double t) { return std::log(t / (1.0 - t)); }

  std::vector<double> to_u(const CovarianceModel& m) const {
    std::vector<double> u{std::log(m.sigma)};
    if (kind == ModelKind::powexp_gauss) {
      u.push_back(std::log(m.range));
      u.push_back(logit(std::clamp(0.5 * m.gamma, 1e-9, 1.0 - 1e-9)));
    }
    return u;
  }

  CovarianceModel from_u(const std::vector<double>& u) const {
    const double sigma = std::clamp(std::exp(u[0]), bounds.sigma_lo, bounds.sigma_hi);
    if (kind == ModelKind::iid_gauss) return CovarianceModel::iid(sigma, dim);
    const double range = std::clamp(std::exp(u[1]), bounds.range_lo, bounds.range_hi);
    const double half = std::min(1.0 / (1.0 + std::exp(-u[2])), 1.0 - 1e-9);
    const double gamma = std::clamp(2.0 * half, bounds.gamma_lo, bounds.gamma_hi);
    return CovarianceModel::powexp(sigma, range, gamma, dim);
  }

  static std::vector<double> theta(const CovarianceModel& m) {
    if (m.kind == ModelKind::powexp_gauss) return {m.sigma, m.range, m.gamma};
    return {m.sigma};
  }
};

struct NelderMeadRun {
  std::vector<double> best_u;
  double best_value = 0.0;
  bool converged = false;
};

template <class F>
NelderMeadRun nelder_mead(F& objective, std::vector<double> start, const OptimizerOptions& opt) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> simplex{start};
  for (std::size_t i = 0; i < n; ++i) {
    auto v = start;
    v[i] += opt.initial_step;
    simplex.push_back(v);
  }
  std::vector<double> fv;
  std::size_t evals = 0;
  auto eval = [&](const std::vector<double>& u) {
    ++evals;
    return objective(u);
  };
  for (const auto& v : simplex) fv.push_back(eval(v));

  NelderMeadRun run;
  std::vector<std::size_t> order(n + 1);
  while (true) {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    {
      std::vector<std::vector<double>> s2;
      std::vector<double> f2;
      for (auto i : order) {
        s2.push_back(simplex[i]);
        f2.push_back(fv[i]);
      }
      simplex.swap(s2);
      fv.swap(f2);
    }
    double diameter = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += (simplex[i][k] - simplex[0][k]) * (simplex[i][k] - simplex[0][k]);
      diameter = std::max(diameter, std::sqrt(s));
    }
    if (diameter < opt.tolerance) {
      run.converged = true;
      break;
    }
    if (evals >= opt.max_evals) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);
    }
    auto along = [&](double t) {
      std::vector<double> v(n);
      for (std::size_t k = 0; k < n; ++k) v[k] = centroid[k] + t * (simplex[n][k] - centroid[k]);
      return v;
    };
    const auto xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < fv[0]) {
      const auto xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[n] = xe;
        fv[n] = fe;
      } else {
        simplex[n] = xr;
        fv[n] = fr;
      }
      continue;
    }
    if (fr < fv[n - 1]) {
      simplex[n] = xr;
      fv[n] = fr;
      continue;
    }
    const bool outside = fr < fv[n];
    const auto xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[n])) {
      simplex[n] = xc;
      fv[n] = fc;
      continue;
    }
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
      fv[i] = eval(simplex[i]);
    }
  }
  run.best_u = simplex[0];
  run.best_value = fv[0];
  return run;
}

template <class E>
[[noreturn]] void rethrow_tagged(const E& e, const char* stage) {
  throw E(std::string(stage) + ": " + e.what());
}

}  // namespace

FitResult fit_min_contrast(const SummaryCurve& k_hat, const ContrastSpec& spec, const CovarianceModel& init,
                           const FitBounds& bounds, const OptimizerOptions& options) {
  spec.validate();
  init.validate();
  if (init.kind == ModelKind::stationarized) throw ConfigError("only Gaussian models can be fitted");
  if (!(init.sigma >= bounds.sigma_lo && init.sigma <= bounds.sigma_hi)) throw ConfigError("initial sigma outside bounds");
  if (init.kind == ModelKind::powexp_gauss &&
      (!(init.range >= bounds.range_lo && init.range <= bounds.range_hi) ||
       !(init.gamma >= bounds.gamma_lo && init.gamma <= bounds.gamma_hi))) {
    throw ConfigError("initial parameters outside bounds");
  }
  const Parametrization par{init.kind, init.dim, bounds};

  FitResult result;
  result.model_kind = init.kind;
  auto objective = [&](const std::vector<double>& u) {
    const CovarianceModel m = par.from_u(u);
    const double v = contrast(m, k_hat, spec);
    result.trace.push_back({Parametrization::theta(m), v});
    return v;
  };

  const auto u0 = par.to_u(init);
  NelderMeadRun best = nelder_mead(objective, u0, options);
  Rng jitter = make_rng(SeedSpec{0x6A177E5ULL, 0});
  std::normal_distribution<double> normal(0.0, 0.25);
  for (int start = 1; start <= options.restarts; ++start) {
    auto u = u0;
    for (double& x : u) x += normal(jitter);
    const NelderMeadRun run = nelder_mead(objective, u, options);
    if (run.best_value < best.best_value) best = run;
  }
  result.model = par.from_u(best.best_u);
  result.theta_hat = Parametrization::theta(result.model);
  result.contrast_value = contrast(result.model, k_hat, spec);
  result.n_evals = result.trace.size();
  result.converged = best.converged;
  return result;
}

SummaryCurve empirical_l_variance(const std::vector<PointPattern>& batch, const std::vector<double>& r_grid) {
  if (batch.size() < 20) throw ConfigError("empirical L variance needs at least 20 replicates");
  check_grid(r_grid);
  const int d = batch.front().dim;
  std::vector<double> mean(r_grid.size(), 0.0), m2(r_grid.size(), 0.0);
  // Welford updates in replicate order.
  double count = 0.0;
  for (const auto& p : batch) {
    const SummaryCurve l = l_centered_from_k(k_empirical(p, r_grid), d);
    count += 1.0;
    for (std::size_t i = 0; i < r_grid.size(); ++i) {
      const double delta = l.values[i] - mean[i];
      mean[i] += delta / count;
      m2[i] += delta * (l.values[i] - mean[i]);
    }
  }
  SummaryCurve out;
  out.kind = CurveKind::other;
  out.r = r_grid;
  out.values.resize(r_grid.size());
  for (std::size_t i = 0; i < r_grid.size(); ++i) out.values[i] = std::max(0.0, m2[i] / (count - 1.0));
  return out;
}

TwoStageResult fit_two_stage(const SummaryCurve& k_hat, const ContrastSpec& stage1, const CovarianceModel& init,
                             const TwoStageOptions& options, const FitBounds& bounds,
                             const OptimizerOptions& optimizer) {
  TwoStageResult out;
  auto tagged = [](auto&& body, const char* stage) {
    try {
      body();
    } catch (const InputError& e) {
      rethrow_tagged(e, stage);
    } catch (const ConfigError& e) {
      rethrow_tagged(e, stage);
    } catch (const NumericalError& e) {
      rethrow_tagged(e, stage);
    }
  };
  tagged([&] { out.stage1 = fit_min_contrast(k_hat, stage1, init, bounds, optimizer); }, "stage 1");
  tagged(
      [&] {
        PerturbedLatticeSpec sim;
        sim.model = out.stage1.model;
        sim.target_window = options.window;
        sim.seed = options.seed;
        const auto batch = simulate_batch(sim, options.n_sims);
        ContrastSpec spec2 = options.stage2;
        spec2.validate();
        out.l_variance = empirical_l_variance(batch, spec2.nodes());
        spec2.weight = out.l_variance;
        out.stage2 = fit_min_contrast(k_hat, spec2, out.stage1.model, bounds, optimizer);
      },
      "stage 2");
  return out;
}

}  // namespace perlat
