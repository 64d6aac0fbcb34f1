#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>

#include "oracles.hpp"
#include "perlat/envelope.hpp"
#include "perlat/error.hpp"
#include "perlat/estimators.hpp"
#include "perlat/ktheory.hpp"
#include "perlat/lattice_sim.hpp"

using namespace perlat;
constexpr double kPi = std::numbers::pi;

namespace {

PointPattern lattice(const CovarianceModel& m, const BoxWindow& w, std::uint64_t seed) {
  PerturbedLatticeSpec s;
  s.model = m;
  s.target_window = w;
  s.seed = {seed, 0};
  return simulate(s);
}

double chi2_uniform(const Histogram& h) {
  double total = 0.0;
  for (double c : h.counts) total += c;
  const double e = total / h.counts.size();
  double x = 0.0;
  for (double c : h.counts) x += (c - e) * (c - e) / e;
  return x;
}

double chi2_quantile(double p, double dof) {
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

}  // namespace

TEST(Rescale, Examples) {
  PointPattern p = simulate_binomial(BoxWindow::cube(3, 0.0, 70.0), 4807, {1, 0});
  const auto r = rescale_to_unit_intensity(p);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(r.window.max[k], std::cbrt(4807.0) / 2.0, 1e-12);
    EXPECT_NEAR(r.window.max[k], 8.4384, 5e-5);
    EXPECT_NEAR(r.window.min[k], -r.window.max[k], 1e-12);
  }
  EXPECT_NEAR(r.intensity(), 1.0, 1e-12);
  EXPECT_EQ(r.size(), 4807u);

  const auto q = rescale_to_unit_intensity(simulate_binomial(BoxWindow::cube(3, 0.0, 1.0), 1000, {2, 0}));
  EXPECT_NEAR(q.window.max[0], 5.0, 1e-12);

  // Idempotent, and a unit-intensity pattern is only recentred.
  const auto twice = rescale_to_unit_intensity(r);
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(twice.points[i][k], r.points[i][k], 1e-12);
  }
  PointPattern unit;
  unit.window = BoxWindow::cube(3, 0.0, 2.0);
  unit.points = {{0.5, 0.5, 0.5}, {1.5, 0.5, 0.5}, {0.5, 1.5, 0.5}, {1.5, 1.5, 0.5},
                 {0.5, 0.5, 1.5}, {1.5, 0.5, 1.5}, {0.5, 1.5, 1.5}, {1.2, 1.5, 1.9}};
  const auto u = rescale_to_unit_intensity(unit);
  for (std::size_t i = 0; i < unit.size(); ++i) {
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(u.points[i][k], unit.points[i][k] - 1.0, 1e-15);
  }
}

TEST(KEmpirical, SinglePair) {
  PointPattern p;
  p.window = BoxWindow::cube(3, 0.0, 100.0);
  p.points = {{10.0, 10.0, 10.0}, {10.5, 10.0, 10.0}};
  const auto k = k_empirical(p, {0.49, 0.5, 0.51, 1.0});
  const double v = 1e6;
  const double expected = v / 4.0 * 2.0 * v / (99.5 * 100.0 * 100.0);
  EXPECT_EQ(k.values[0], 0.0);
  EXPECT_NEAR(k.values[1], expected, 1e-9 * expected);
  EXPECT_NEAR(k.values[3], expected, 1e-9 * expected);
  EXPECT_THROW(k_empirical(p, {60.0}), ConfigError);
}

TEST(KEmpirical, BinomialBaseline) {
  const BoxWindow w = BoxWindow::cube(3, 0.0, std::cbrt(4000.0));
  const std::vector<double> grid{0.5, 1.0, 1.5, 2.0};
  std::vector<std::vector<double>> k(grid.size()), l(grid.size());
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto p = simulate_binomial(w, 4000, {3, s});
    const auto kk = k_empirical(p, grid);
    const auto ll = l_centered_from_k(kk, 3);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      k[i].push_back(kk.values[i]);
      l[i].push_back(ll.values[i]);
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto m = oracle::moments(k[i]);
    EXPECT_NEAR(m.mean, 4.0 / 3.0 * kPi * std::pow(grid[i], 3), 3.0 * m.se_mean) << grid[i];
    const auto ml = oracle::moments(l[i]);
    EXPECT_NEAR(ml.mean, 0.0, 3.0 * ml.se_mean) << grid[i];
  }
}

TEST(KEmpirical, PermutationAndTranslationInvariance) {
  auto p = lattice(CovarianceModel::iid(0.2, 3), BoxWindow::cube(3, 0.0, 8.0), 5);
  const auto grid = linear_grid(0.0, 3.0, 0.25);
  const auto k0 = k_empirical(p, grid);
  const auto g0 = pcf_empirical(p, grid, 0.2);
  PointPattern q = p;
  std::reverse(q.points.begin(), q.points.end());
  std::mt19937_64 rng(1);
  std::shuffle(q.points.begin(), q.points.end(), rng);
  for (auto& x : q.points) x[0] += 64.0, x[2] -= 32.0;
  q.window.min[0] += 64.0, q.window.max[0] += 64.0;
  q.window.min[2] -= 32.0, q.window.max[2] -= 32.0;
  const auto k1 = k_empirical(q, grid);
  const auto g1 = pcf_empirical(q, grid, 0.2);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(k0.values[i], k1.values[i], 1e-9 * std::max(1.0, k0.values[i]));
    EXPECT_NEAR(g0.values[i], g1.values[i], 1e-9 * std::max(1.0, g0.values[i]));
  }
}

TEST(KEmpirical, MatchesTheoryForIidLattice) {
  const auto m = CovarianceModel::iid(0.18, 3);
  const std::vector<double> grid{0.6, 1.0, 1.5, 2.0, 2.5};
  std::vector<std::vector<double>> k(grid.size());
  PerturbedLatticeSpec s;
  s.model = m;
  s.target_window = BoxWindow::cube(3, 0.0, 12.0);
  s.seed = {8, 0};
  for (const auto& p : simulate_batch(s, 40)) {
    const auto kk = k_empirical(p, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) k[i].push_back(kk.values[i]);
  }
  const auto theory = k_theoretical(m, grid, 15.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto mm = oracle::moments(k[i]);
    EXPECT_NEAR(mm.mean, theory.values[i], 3.5 * mm.se_mean) << grid[i];
  }
}

TEST(KEmpirical, VarianceShrinksWithWindow) {
  const std::vector<double> grid{1.0};
  std::vector<double> small, large;
  for (std::uint64_t s = 0; s < 200; ++s) {
    small.push_back(k_empirical(simulate_poisson(BoxWindow::cube(3, 0.0, 6.0), 1.0, {10, s}), grid).values[0]);
    large.push_back(k_empirical(simulate_poisson(BoxWindow::cube(3, 0.0, 12.0), 1.0, {11, s}), grid).values[0]);
  }
  EXPECT_LT(oracle::moments(large).var / oracle::moments(small).var, 0.75);
}

TEST(Pcf, BinomialIsOne) {
  const BoxWindow w = BoxWindow::cube(3, 0.0, 14.0);
  const std::vector<double> grid{0.5, 1.0, 1.5, 2.0};
  std::vector<std::vector<double>> g(grid.size());
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto gg = pcf_empirical(simulate_binomial(w, 2744, {12, s}), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) g[i].push_back(gg.values[i]);
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto m = oracle::moments(g[i]);
    EXPECT_NEAR(m.mean, 1.0, 3.5 * m.se_mean + 0.02) << grid[i];
  }
}

TEST(Pcf, LatticePeaksAndRegularity) {
  const auto p = lattice(CovarianceModel::stationarized(3), BoxWindow::cube(3, 0.0, 10.0), 1);
  const auto grid = linear_grid(0.0, 2.0, 0.01);
  const auto g = pcf_empirical(p, grid, 0.05);
  EXPECT_EQ(g.values[0], 0.0);
  for (double norm : {1.0, std::sqrt(2.0), std::sqrt(3.0)}) {
    const auto i = static_cast<std::size_t>(std::lround(norm / 0.01));
    const auto far = static_cast<std::size_t>(std::lround((norm - 0.12) / 0.01));
    EXPECT_GT(g.values[i], 5.0 * std::max(g.values[far], 0.1)) << norm;
  }
  // Perturbed lattice: suppressed at short range, near one beyond r = 1.5.
  const auto q = lattice(CovarianceModel::iid(0.18, 3), BoxWindow::cube(3, 0.0, 16.0), 2);
  const auto gq = pcf_empirical(q, {0.3, 2.5, 3.0}, 0.2);
  EXPECT_LT(gq.values[0], 0.25);
  EXPECT_NEAR(gq.values[1], 1.0, 0.25);
}

TEST(GFunction, LatticeStepAndBinomialLaw) {
  const auto p = lattice(CovarianceModel::stationarized(3), BoxWindow::cube(3, 0.0, 10.0), 1);
  const auto g = g_nearest_neighbor(p, {0.5, 0.99, 1.01, 1.5});
  EXPECT_EQ(g.values[1], 0.0);
  EXPECT_EQ(g.values[2], 1.0);

  const BoxWindow w = BoxWindow::cube(3, 0.0, 15.0);
  const std::vector<double> grid{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<std::vector<double>> gs(grid.size());
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto gg = g_nearest_neighbor(simulate_poisson(w, 1.0, {13, s}), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) gs[i].push_back(gg.values[i]);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      EXPECT_GE(gg.values[i], 0.0);
      EXPECT_LE(gg.values[i], 1.0);
      if (i) {
        EXPECT_GE(gg.values[i], gg.values[i - 1]);
      }
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto m = oracle::moments(gs[i]);
    const double expected = 1.0 - std::exp(-4.0 / 3.0 * kPi * std::pow(grid[i], 3));
    EXPECT_NEAR(m.mean, expected, 3.5 * m.se_mean + 1e-3) << grid[i];
  }
}

TEST(GFunction, RepulsionBelowPoisson) {
  const auto p = lattice(CovarianceModel::iid(0.18, 3), BoxWindow::cube(3, 0.0, 14.0), 3);
  const auto g = g_nearest_neighbor(p, {0.3, 1.0});
  EXPECT_LT(g.values[0], 1.0 - std::exp(-4.0 / 3.0 * kPi * 0.027));
}

TEST(BoxCounts, PoissonVarianceEqualsMean) {
  std::vector<double> means, vars;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto b = number_variance_boxes(simulate_poisson(BoxWindow::cube(3, 0.0, 25.5), 1.0, {14, s}), 2.7, 1.5);
    means.push_back(b.mean);
    vars.push_back(b.variance);
  }
  const auto mm = oracle::moments(means), mv = oracle::moments(vars);
  EXPECT_NEAR(mm.mean, 19.683, 3.0 * mm.se_mean);
  EXPECT_NEAR(mv.mean, 19.683, 3.0 * mv.se_mean);
}

TEST(BoxCounts, DesignOnUnitIntensityWindow) {
  const auto g = box_grid(BoxWindow::cube(3, -8.4384, 8.4384), 2.7, 1.5);
  EXPECT_EQ(g.boxes.size(), 64u);
  for (std::size_t i = 0; i < g.boxes.size(); ++i) {
    EXPECT_NEAR(g.boxes[i].side(0), 2.7, 1e-12);
    for (std::size_t j = 0; j < i; ++j) {
      double gap = 0.0;
      for (int k = 0; k < 3; ++k) {
        gap = std::max(gap, std::max(g.boxes[i].min[k] - g.boxes[j].max[k], g.boxes[j].min[k] - g.boxes[i].max[k]));
      }
      EXPECT_GE(gap, 1.5 - 1e-9);
    }
  }
  EXPECT_THROW(box_grid(BoxWindow::cube(3, 0.0, 5.0), 2.7, 1.5), ConfigError);
}

TEST(BoxCounts, LatticeSuppressesFluctuations) {
  const auto b = number_variance_boxes(lattice(CovarianceModel::iid(0.25, 3), BoxWindow::cube(3, 0.0, 25.5), 4));
  EXPECT_LT(b.variance / b.mean, 1.0);
}

TEST(NumberVarianceBatch, PoissonIsOne) {
  std::vector<PointPattern> batch;
  for (std::uint64_t s = 0; s < 200; ++s) batch.push_back(simulate_poisson(BoxWindow::cube(3, -4.0, 4.0), 1.0, {15, s}));
  const auto nv = number_variance_batch(batch, {1.0, 2.0, 3.0});
  for (double v : nv.values) EXPECT_NEAR(v, 1.0, 0.35);
  EXPECT_THROW(number_variance_batch(std::vector<PointPattern>(batch.begin(), batch.begin() + 10), {1.0}), ConfigError);
  EXPECT_THROW(number_variance_batch(batch, {5.0}), ConfigError);
}

TEST(Scattering, SinglePointAndNaiveOracle) {
  PointPattern one;
  one.window = BoxWindow::cube(3, 0.0, 5.0);
  one.points = {{1.3, 2.2, 0.4}};
  for (double s : scattering_intensity(one, 4.0).intensities) EXPECT_NEAR(s, 1.0, 1e-12);

  const auto p = simulate_binomial(BoxWindow{3, {-1.0, 0.0, 2.0}, {4.0, 6.0, 8.5}}, 60, {16, 0});
  const auto spec = scattering_intensity(p, 3.0);
  const auto tap = scattering_intensity(p, 3.0, Taper::sine);
  ASSERT_EQ(spec.norms.size(), tap.norms.size());
  const double rho = p.intensity();
  for (std::size_t m = 0; m < spec.norms.size(); m += 7) {
    const Point& k = spec.wavevectors[m];
    std::complex<double> a = 0.0, b = 0.0;
    for (const auto& x : p.points) {
      double ph = 0.0, h = 1.0;
      for (int c = 0; c < 3; ++c) {
        const double L = p.window.side(c), u = x[c] - p.window.min[c];
        ph += k[c] * u;
        h *= std::sqrt(2.0 / L) * std::sin(kPi * u / L);
      }
      a += std::polar(1.0, -ph);
      b += h * std::polar(1.0, -ph);
    }
    // Taper transform by quadrature of the separable factors.
    std::complex<double> H = 1.0;
    for (int c = 0; c < 3; ++c) {
      const double L = p.window.side(c);
      std::complex<double> f = 0.0;
      const int n = 20000;
      for (int i = 0; i < n; ++i) {
        const double u = (i + 0.5) * L / n;
        f += std::sqrt(2.0 / L) * std::sin(kPi * u / L) * std::polar(1.0, -k[c] * u) * (L / n);
      }
      H *= f;
    }
    EXPECT_NEAR(spec.intensities[m], std::norm(a) / 60.0, 1e-9);
    EXPECT_NEAR(tap.intensities[m], std::norm(b - rho * H) / rho, 1e-6);
  }
}

TEST(Scattering, BinomialMeanIsOne) {
  std::vector<double> all;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto spec = scattering_intensity(simulate_binomial(BoxWindow::cube(3, 0.0, 12.0), 1728, {17, s}), 1.5);
    for (double v : spec.intensities) {
      EXPECT_GE(v, 0.0);
      all.push_back(v);
    }
  }
  const auto m = oracle::moments(all);
  EXPECT_NEAR(m.mean, 1.0, 3.0 * m.se_mean);
}

TEST(Scattering, HyperuniformSignatureAndExponent) {
  std::vector<ScatteringSpectrum> lat, poi;
  for (std::uint64_t s = 0; s < 10; ++s) {
    lat.push_back(scattering_intensity(lattice(CovarianceModel::iid(0.25, 3), BoxWindow::cube(3, 0.0, 20.0), 100 + s), 1.5,
                                       Taper::sine));
    poi.push_back(scattering_intensity(simulate_poisson(BoxWindow::cube(3, 0.0, 20.0), 1.0, {18, s}), 1.5));
  }
  const auto rad = radial_bins(pool_spectra(lat), 1.5, 12);
  ASSERT_GE(rad.s_mean.size(), 8u);
  EXPECT_LT(rad.s_mean.front(), 0.25 * rad.s_mean.back());
  EXPECT_LT(rad.s_mean.back(), 1.0);

  const auto fit = exponent_fit(pool_spectra(poi), 1.5, 12);
  EXPECT_NEAR(fit.alpha_hat, 0.0, 3.0 * fit.stderr_alpha + 0.05);
  EXPECT_GT(exponent_fit(pool_spectra(lat), 1.5, 12).alpha_hat, 0.5);
  EXPECT_THROW(exponent_fit(pool_spectra(poi), 0.4, 12), ConfigError);
}

TEST(RadialBins, DropsEmptyBins) {
  ScatteringSpectrum s;
  s.norms = {0.1, 0.15, 0.9};
  s.wavevectors.resize(3);
  s.intensities = {1.0, 3.0, 5.0};
  const auto r = radial_bins(s, 1.0, 5);
  ASSERT_EQ(r.k_mean.size(), 2u);
  EXPECT_DOUBLE_EQ(r.s_mean[0], 2.0);
  EXPECT_EQ(r.modes[0], 2u);
  EXPECT_DOUBLE_EQ(r.bin_lo[1], 0.8);
}

TEST(Fry, TwoPoints) {
  PointPattern p;
  p.window = BoxWindow::cube(3, -2.0, 2.0);
  p.points = {{0, 0, 0}, {1, 0, 0}};
  auto v = fry_slab(p, {0, 1}, 0.5);
  std::sort(v.begin(), v.end());
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0], (std::array<double, 2>{-1.0, 0.0}));
  EXPECT_EQ(v[1], (std::array<double, 2>{1.0, 0.0}));
  p.points[1] = {1, 0, 0.8};
  EXPECT_TRUE(fry_slab(p, {0, 1}, 0.5).empty());
}

TEST(Fry, IsotropyAndAnisotropy) {
  const auto p = simulate_binomial(BoxWindow::cube(3, 0.0, 14.0), 2744, {19, 0});
  const auto iso = angle_histogram(fry_slab(p, {0, 1}, 0.5, 2.0), 24);
  EXPECT_LT(chi2_uniform(iso), chi2_quantile(0.999, 23));
  // A weakly perturbed grid concentrates displacements on the axes and diagonals.
  const auto grid = lattice(CovarianceModel::iid(0.1, 3), BoxWindow::cube(3, 0.0, 14.0), 3);
  const auto an = angle_histogram(fry_slab(grid, {0, 1}, 0.5, 2.0), 24);
  EXPECT_GT(chi2_uniform(an), chi2_quantile(0.999, 23));
}

TEST(NnAngles, Examples) {
  const auto p = simulate_binomial(BoxWindow::cube(3, 0.0, 16.0), 4096, {20, 0});
  EXPECT_LT(chi2_uniform(nn_angle_histogram(p, {0, 1}, 12)), chi2_quantile(0.999, 11));

  // Axis-aligned grid: every projected neighbour vector is axial.
  PointPattern grid;
  grid.window = BoxWindow::cube(3, 0.0, 6.0);
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b)
      for (int c = 0; c < 6; ++c) grid.points.push_back({a + 0.5, b + 0.5, c + 0.5});
  const auto h = nn_angle_histogram(grid, {0, 1}, 16);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    bool axial = false;
    for (double t : {0.0, kPi / 2, kPi, 1.5 * kPi, 2.0 * kPi}) {
      if (t >= h.lo[i] - 1e-9 && t <= h.hi[i] + 1e-9) axial = true;
    }
    if (!axial) {
      EXPECT_EQ(h.counts[i], 0.0) << i;
    }
  }

  // Right triangle: neighbour vectors (1, 0.2), (-1, -0.2), (0, -2) by hand.
  PointPattern tri;
  tri.window = BoxWindow::cube(3, -1.0, 3.0);
  tri.points = {{0, 0, 0}, {1, 0.2, 0}, {0, 2, 0}};
  const auto t = nn_angle_histogram(tri, {0, 1}, 8);
  std::vector<double> expected(8, 0.0);
  for (double a : {std::atan2(0.2, 1.0), std::atan2(-0.2, -1.0) + 2 * kPi, 1.5 * kPi}) {
    expected[static_cast<std::size_t>(std::floor(a / (kPi / 4)))] += 1.0;
  }
  EXPECT_EQ(t.counts, expected);
}

TEST(CountHistogram, PoissonReference) {
  const auto p = simulate_poisson(BoxWindow::cube(3, -8.4384, 8.4384), 1.0, {21, 0});
  const auto h = count_histogram(p);
  EXPECT_EQ(h.boxes.counts.size(), 64u);
  double f = 0.0, r = 0.0;
  for (std::size_t i = 0; i < h.values.size(); ++i) {
    f += h.frequency[i];
    r += h.poisson_reference[i];
  }
  EXPECT_DOUBLE_EQ(f, 64.0);
  EXPECT_NEAR(r, 64.0, 0.5);
}
