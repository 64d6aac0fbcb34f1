#include "perlat/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "perlat/error.hpp"
#include "perlat/ktheory.hpp"

namespace perlat {

std::string to_string(EnvelopeMeasure m) { return m == EnvelopeMeasure::erl ? "erl" : "area"; }

EnvelopeMeasure parse_envelope_measure(const std::string& name) {
  if (name == "erl") return EnvelopeMeasure::erl;
  if (name == "area") return EnvelopeMeasure::area;
  throw ConfigError("unknown envelope measure '" + name + "'");
}

std::size_t min_simulations(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  return static_cast<std::size_t>(std::ceil(1.0 / alpha - 1e-9)) - 1;
}

namespace {

// Orders curves by extremeness; true when a is strictly more extreme than b.
struct Extremeness {
  EnvelopeMeasure measure;
  std::vector<std::vector<double>> sorted_ranks;  // erl
  std::vector<double> area;                       // area

  bool less(std::size_t a, std::size_t b) const {
    if (measure == EnvelopeMeasure::area) return area[a] < area[b];
    return std::lexicographical_compare(sorted_ranks[a].begin(), sorted_ranks[a].end(), sorted_ranks[b].begin(),
                                        sorted_ranks[b].end());
  }
  bool less_equal(std::size_t a, std::size_t b) const { return !less(b, a); }
};

}  // namespace

EnvelopeResult rank_envelope(const std::vector<double>& r, const std::vector<double>& data,
                             const std::vector<std::vector<double>>& sims, const EnvelopeOptions& options) {
  const std::size_t n_sims = sims.size();
  if (n_sims < min_simulations(options.alpha)) {
    throw ConfigError("n_sims too small for the requested level (need " +
                      std::to_string(min_simulations(options.alpha)) + ")");
  }
  const std::size_t nr = r.size();
  if (nr == 0 || data.size() != nr) throw ConfigError("data curve does not match the r grid");
  for (const auto& c : sims) {
    if (c.size() != nr) throw ConfigError("simulated curve does not match the r grid");
  }
  const std::size_t s = n_sims + 1;
  auto curve = [&](std::size_t i) -> const std::vector<double>& { return i == 0 ? data : sims[i - 1]; };

  std::vector<std::vector<double>> rank(s, std::vector<double>(nr));
  std::vector<std::vector<double>> cont(s, std::vector<double>(nr));
  std::vector<double> column(s), sorted(s);
  for (std::size_t k = 0; k < nr; ++k) {
    for (std::size_t i = 0; i < s; ++i) column[i] = curve(i)[k];
    sorted = column;
    std::sort(sorted.begin(), sorted.end());
    const double spread = sorted.back() - sorted.front();
    for (std::size_t i = 0; i < s; ++i) {
      const double t = column[i];
      const auto le = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
      const auto lt = std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
      const double ge = static_cast<double>(s) - static_cast<double>(lt);
      rank[i][k] = std::min(le, ge);
      if (spread > 0.0) {
        // Gap to the next value toward the centre on the relevant side.
        const auto up = std::upper_bound(sorted.begin(), sorted.end(), t);
        const double gap_low = up == sorted.end() ? 0.0 : *up - t;
        const double gap_high = lt == 0 ? 0.0 : t - sorted[static_cast<std::size_t>(lt - 1)];
        const double c_low = le - gap_low / spread;
        const double c_high = ge - gap_high / spread;
        cont[i][k] = std::min(c_low, c_high);
      } else {
        cont[i][k] = rank[i][k];
      }
    }
  }

  Extremeness ext{options.measure, {}, {}};
  if (options.measure == EnvelopeMeasure::erl) {
    ext.sorted_ranks = rank;
    for (auto& v : ext.sorted_ranks) std::sort(v.begin(), v.end());
  } else {
    ext.area.resize(s);
    for (std::size_t i = 0; i < s; ++i) {
      const double extreme = *std::min_element(rank[i].begin(), rank[i].end());
      double acc = 0.0;
      for (std::size_t k = 0; k < nr; ++k) acc += std::min(cont[i][k], extreme);
      ext.area[i] = acc / static_cast<double>(nr);
    }
  }

  EnvelopeResult out;
  out.r = r;
  out.data_curve = data;
  out.alpha = options.alpha;
  out.measure = options.measure;
  out.n_sims = n_sims;
  std::size_t at_most = 0, strictly = 0;
  for (std::size_t j = 0; j < s; ++j) {
    if (ext.less_equal(j, 0)) ++at_most;
    if (j > 0 && ext.less(j, 0)) ++strictly;
  }
  out.p_upper = static_cast<double>(at_most) / static_cast<double>(s);
  out.p_lower = static_cast<double>(1 + strictly) / static_cast<double>(s);
  out.rejected = out.p_upper < options.alpha;

  // Extremeness count of each simulation among all s curves.
  const double threshold = options.alpha * static_cast<double>(s);
  out.lower.assign(nr, std::numeric_limits<double>::infinity());
  out.upper.assign(nr, -std::numeric_limits<double>::infinity());
  std::size_t kept = 0;
  for (std::size_t i = 1; i < s; ++i) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < s; ++j) {
      if (ext.less_equal(j, i)) ++count;
    }
    if (static_cast<double>(count) < threshold) continue;
    ++kept;
    for (std::size_t k = 0; k < nr; ++k) {
      out.lower[k] = std::min(out.lower[k], sims[i - 1][k]);
      out.upper[k] = std::max(out.upper[k], sims[i - 1][k]);
    }
  }
  if (kept == 0) throw NumericalError("no simulated curve inside the envelope");
  return out;
}

EnvelopeResult global_envelope_test(const PointPattern& data, const PatternSimulator& simulator,
                                    const std::vector<double>& r_grid, std::size_t n_sims, const SeedSpec& seed,
                                    const EnvelopeOptions& options) {
  if (n_sims < min_simulations(options.alpha)) {
    throw ConfigError("n_sims too small for the requested level (need " +
                      std::to_string(min_simulations(options.alpha)) + ")");
  }
  const int d = data.dim;
  auto statistic = [&](const PointPattern& p) { return l_centered_from_k(k_empirical(p, r_grid), d).values; };
  const auto data_curve = statistic(data);
  std::vector<std::vector<double>> sims;
  sims.reserve(n_sims);
  for (std::size_t j = 0; j < n_sims; ++j) sims.push_back(statistic(simulator(seed.with_stream(seed.stream_id + j))));
  return rank_envelope(r_grid, data_curve, sims, options);
}

PatternSimulator lattice_null(const PerturbedLatticeSpec& spec) {
  auto sim = std::make_shared<LatticeSimulator>(spec);
  return [sim](const SeedSpec& seed) { return (*sim)(seed); };
}

PatternSimulator poisson_null(const BoxWindow& window, double intensity) {
  window.validate();
  return [window, intensity](const SeedSpec& seed) { return simulate_poisson(window, intensity, seed); };
}

CountHistogram count_histogram(const PointPattern& p, double box_side, double gap) {
  CountHistogram h;
  h.boxes = number_variance_boxes(p, box_side, gap);
  const auto max_count = static_cast<long>(*std::max_element(h.boxes.counts.begin(), h.boxes.counts.end()));
  const long top = std::max(max_count, static_cast<long>(std::ceil(h.boxes.mean + 5.0 * std::sqrt(h.boxes.mean + 1.0))));
  const double m = h.boxes.mean;
  const double n_boxes = static_cast<double>(h.boxes.counts.size());
  for (long v = 0; v <= top; ++v) {
    h.values.push_back(v);
    h.frequency.push_back(0.0);
    const double logp = m > 0.0 ? v * std::log(m) - m - std::lgamma(v + 1.0) : (v == 0 ? 0.0 : -INFINITY);
    h.poisson_reference.push_back(n_boxes * std::exp(logp));
  }
  for (double c : h.boxes.counts) h.frequency[static_cast<std::size_t>(c)] += 1.0;
  return h;
}

}  // namespace perlat
