#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "perlat/gauss_field.hpp"
#include "perlat/geometry.hpp"

namespace perlat {

/// Perturbed lattice Xi = {i + U + p_i : i in Z^d} observed in target_window.
struct PerturbedLatticeSpec {
  CovarianceModel model;
  BoxWindow target_window;
  std::optional<double> buffer;  // lattice units; unset selects default_buffer(model)
  SeedSpec seed;
  FieldOptions field;
};

/// ceil(3 sigma + 3).
double default_buffer(const CovarianceModel& model);

/// Margin suggested for a model: 3 sigma plus, for correlated fields, one
/// correlation length (the lag at which c drops to sigma^2 e^{-3}).
double recommended_buffer(const CovarianceModel& model);

double effective_buffer(const PerturbedLatticeSpec& spec);

/// Sites whose displaced positions may land in the buffered window.
IntBox site_box(const PerturbedLatticeSpec& spec);

/// Reusable simulator for one spec: the field sampler is built once and every
/// call with a SeedSpec yields one realization.
class LatticeSimulator {
 public:
  explicit LatticeSimulator(const PerturbedLatticeSpec& spec);

  PointPattern operator()(const SeedSpec& seed) const;
  const PerturbedLatticeSpec& spec() const { return spec_; }
  SamplingMethod method() const { return sampler_.method(); }

 private:
  PerturbedLatticeSpec spec_;
  GaussianFieldSampler sampler_;
};

/// One realization: U ~ uniform [0,1)^d, field on site_box, points i + U + p_i
/// kept when they fall in the (closed) target window.
PointPattern simulate(const PerturbedLatticeSpec& spec);

/// n realizations on streams spec.seed.stream_id + 0..n-1.
std::vector<PointPattern> simulate_batch(const PerturbedLatticeSpec& spec, std::size_t n);

/// Homogeneous Poisson process of the given intensity.
PointPattern simulate_poisson(const BoxWindow& window, double intensity, const SeedSpec& seed);

/// n independent uniform points.
PointPattern simulate_binomial(const BoxWindow& window, std::size_t n, const SeedSpec& seed);

using PatternSimulator = std::function<PointPattern(const SeedSpec&)>;

}  // namespace perlat
