#include "perlat/lattice_sim.hpp"

#include <cmath>
#include <random>

#include "perlat/error.hpp"

namespace perlat {

double default_buffer(const CovarianceModel& model) {
  const double sigma = model.kind == ModelKind::stationarized ? 0.0 : model.sigma;
  return std::ceil(3.0 * sigma + 3.0);
}

double recommended_buffer(const CovarianceModel& model) {
  if (model.kind == ModelKind::stationarized) return 0.0;
  double margin = 3.0 * model.sigma;
  if (model.kind == ModelKind::powexp_gauss && model.gamma > 0.0) {
    margin += std::pow(3.0 * model.range, 1.0 / model.gamma);
  }
  return margin;
}

double effective_buffer(const PerturbedLatticeSpec& spec) {
  return spec.buffer ? *spec.buffer : default_buffer(spec.model);
}

IntBox site_box(const PerturbedLatticeSpec& spec) {
  spec.model.validate();
  spec.target_window.validate();
  if (spec.target_window.dim != spec.model.dim) throw ConfigError("window and model dimensions differ");
  if (spec.buffer && !(*spec.buffer >= 0.0 && std::isfinite(*spec.buffer))) throw ConfigError("buffer must be >= 0");
  const double buffer = effective_buffer(spec);
  IntBox b;
  b.dim = spec.model.dim;
  for (int k = 0; k < b.dim; ++k) {
    b.lo[k] = static_cast<long>(std::floor(spec.target_window.min[k] - buffer - 1.0));
    b.hi[k] = static_cast<long>(std::ceil(spec.target_window.max[k] + buffer));
  }
  return b;
}

LatticeSimulator::LatticeSimulator(const PerturbedLatticeSpec& spec)
    : spec_(spec), sampler_(spec.model, site_box(spec), spec.field) {}

PointPattern LatticeSimulator::operator()(const SeedSpec& seed) const {
  const int d = spec_.model.dim;
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Point shift{};
  for (int k = 0; k < d; ++k) shift[k] = unif(rng);

  std::vector<Point> field;
  sampler_.sample(rng, field);

  const IntBox& box = sampler_.block();
  PointPattern out;
  out.dim = d;
  out.window = spec_.target_window;
  const std::size_t n = box.site_count();
  for (std::size_t i = 0; i < n; ++i) {
    Point x = box.site(i);
    for (int k = 0; k < d; ++k) x[k] += shift[k] + field[i][k];
    if (out.window.contains(x)) out.points.push_back(x);
  }
  return out;
}

PointPattern simulate(const PerturbedLatticeSpec& spec) { return LatticeSimulator(spec)(spec.seed); }

std::vector<PointPattern> simulate_batch(const PerturbedLatticeSpec& spec, std::size_t n) {
  if (n < 1) throw ConfigError("batch size must be >= 1");
  LatticeSimulator sim(spec);
  std::vector<PointPattern> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) out.push_back(sim(spec.seed.with_stream(spec.seed.stream_id + j)));
  return out;
}

PointPattern simulate_binomial(const BoxWindow& window, std::size_t n, const SeedSpec& seed) {
  window.validate();
  Rng rng = make_rng(seed);
  PointPattern out;
  out.dim = window.dim;
  out.window = window;
  out.points.resize(n);
  for (auto& p : out.points) {
    for (int k = 0; k < window.dim; ++k) {
      p[k] = std::uniform_real_distribution<double>(window.min[k], window.max[k])(rng);
    }
  }
  return out;
}

PointPattern simulate_poisson(const BoxWindow& window, double intensity, const SeedSpec& seed) {
  window.validate();
  if (!(intensity >= 0.0) || !std::isfinite(intensity)) throw ConfigError("intensity must be finite and >= 0");
  Rng rng = make_rng(seed);
  const auto n = std::poisson_distribution<long>(intensity * window.volume())(rng);
  PointPattern out;
  out.dim = window.dim;
  out.window = window;
  out.points.resize(static_cast<std::size_t>(n));
  for (auto& p : out.points) {
    for (int k = 0; k < window.dim; ++k) {
      p[k] = std::uniform_real_distribution<double>(window.min[k], window.max[k])(rng);
    }
  }
  return out;
}

}  // namespace perlat
