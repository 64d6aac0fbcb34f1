#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "perlat/estimators.hpp"
#include "perlat/lattice_sim.hpp"

namespace perlat {

enum class EnvelopeMeasure { erl, area };

std::string to_string(EnvelopeMeasure m);
EnvelopeMeasure parse_envelope_measure(const std::string& name);

struct EnvelopeOptions {
  double alpha = 0.05;
  EnvelopeMeasure measure = EnvelopeMeasure::erl;
};

struct EnvelopeResult {
  std::vector<double> r;
  std::vector<double> data_curve;
  std::vector<double> lower, upper;
  double p_lower = 0.0;  // liberal end of the p-interval
  double p_upper = 0.0;  // conservative end; rejection iff p_upper < alpha
  double alpha = 0.05;
  EnvelopeMeasure measure = EnvelopeMeasure::erl;
  std::size_t n_sims = 0;
  bool rejected = false;
};

/// Smallest number of simulations for which level alpha is attainable.
std::size_t min_simulations(double alpha);

/// Global rank envelope of `data` against simulated curves on a common grid.
///
/// Pointwise two-sided ranks R_i(r) = min(#{T_j <= T_i}, #{T_j >= T_i}) over
/// all s = n_sims + 1 curves. erl orders curves by their sorted rank vectors
/// (lexicographically, smaller is more extreme). area uses
/// A_i = mean_r min(c_i(r), min_r R_i(r)) with continuous ranks
/// c_i(r) = R_i(r) - gap / spread, gap being the distance to the nearest less
/// extreme value at r and spread the range of all values at r.
/// p_upper = #{j : e_j <= e_data} / s, p_lower = (1 + #{sims : e_j < e_data}) / s.
/// The envelope spans the simulated curves that are not among the alpha s most
/// extreme ones.
EnvelopeResult rank_envelope(const std::vector<double>& r, const std::vector<double>& data,
                             const std::vector<std::vector<double>>& sims, const EnvelopeOptions& options = {});

/// Simulates n_sims patterns (streams seed.stream_id + 0..n_sims-1) and tests
/// L_hat(r) - r of the data against them.
EnvelopeResult global_envelope_test(const PointPattern& data, const PatternSimulator& simulator,
                                    const std::vector<double>& r_grid, std::size_t n_sims, const SeedSpec& seed,
                                    const EnvelopeOptions& options = {});

/// Null models for the envelope test.
PatternSimulator lattice_null(const PerturbedLatticeSpec& spec);
PatternSimulator poisson_null(const BoxWindow& window, double intensity);

struct CountHistogram {
  BoxCounts boxes;
  std::vector<long> values;          // count value per bin, 0..max
  std::vector<double> frequency;     // boxes with that count
  std::vector<double> poisson_reference;  // expected boxes under Poisson(mean)
};

CountHistogram count_histogram(const PointPattern& p, double box_side = 2.7, double gap = 1.5);

}  // namespace perlat
