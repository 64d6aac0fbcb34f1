#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "oracles.hpp"
#include "perlat/error.hpp"
#include "perlat/special.hpp"

using namespace perlat;
constexpr double kPi = std::numbers::pi;

TEST(Bessel, MatchesStdCylBessel) {
  for (double order : {0.0, 0.5, 1.0, 1.5, 2.0, 2.5}) {
    for (double z = 0.0; z <= 120.0; z += 0.173) {
      const double ref = std::cyl_bessel_j(order, z);
      EXPECT_NEAR(bessel_j(order, z), ref, 1e-12) << "order " << order << " z " << z;
    }
  }
}

TEST(Bessel, SpecialValues) {
  EXPECT_NEAR(bessel_j(0.5, kPi), 0.0, 1e-15);
  EXPECT_EQ(bessel_j(1.0, 0.0), 0.0);
  const double z = 2.0;
  EXPECT_NEAR(bessel_j(1.5, z), std::sqrt(2.0 / (kPi * z)) * (std::sin(z) / z - std::cos(z)), 1e-14);
  EXPECT_NEAR(bessel_j_scaled(1.5, 0.0), 1.0 / (std::pow(2.0, 1.5) * std::tgamma(2.5)), 1e-15);
  EXPECT_THROW(bessel_j(0.3, 1.0), ConfigError);
  EXPECT_THROW(bessel_j(1.0, -1.0), ConfigError);
}

TEST(JrKernel, UnitMassInThreeDimensions) {
  const KernelJr k{3, 5.0};
  // Radial integral on panels of length pi / r, then the mean tail
  // 4 pi x^2 j(x) ~ 3 / (pi r x^2) beyond X.
  const double X = 3000.0;
  const double panel = kPi / k.r;
  double total = 0.0;
  for (double a = 0.0; a < X; a += panel) {
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double x) { return 4.0 * kPi * x * x * jr_kernel(k, x); }, a, a + panel, 0, 0.0);
  }
  total += 3.0 / (kPi * k.r * X);
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(JrKernel, DirectFormula) {
  EXPECT_NEAR(jr_kernel({1, 1.0}, kPi), 0.0, 1e-16);
  const KernelJr k{3, 10.0};
  const double x = 2.0 * kPi;
  const double omega3 = 4.0 * kPi / 3.0;
  const double j = std::cyl_bessel_j(1.5, k.r * x);
  EXPECT_NEAR(jr_kernel(k, x), j * j / (omega3 * x * x * x), 1e-15);
  // Removable singularity at the origin.
  EXPECT_NEAR(jr_kernel(k, 0.0), jr_kernel(k, 1e-7), 1e-6 * jr_kernel(k, 0.0));
}

TEST(JrHat, ValuesAndLensOracle) {
  for (int d = 1; d <= 3; ++d) {
    EXPECT_DOUBLE_EQ(jr_hat({d, 2.0}, 0.0), 1.0);
    EXPECT_EQ(jr_hat({d, 2.0}, 4.0), 0.0);
    EXPECT_EQ(jr_hat({d, 2.0}, 7.5), 0.0);
  }
  // Closed-form overlap fractions.
  EXPECT_NEAR(jr_hat({3, 1.0}, 1.0), 1.0 - 0.75 * 0.5 * 2.0 + (1.0 / 16.0) * 1.0, 1e-14);
  EXPECT_NEAR(jr_hat({1, 1.5}, 1.0), 1.0 - 1.0 / 3.0, 1e-14);
  const double t = 0.7;  // |x| / r in d = 2
  EXPECT_NEAR(jr_hat({2, 1.0}, t), 2.0 / kPi * (std::acos(t / 2.0) - t / 2.0 * std::sqrt(1.0 - t * t / 4.0)), 1e-14);

  // Monte Carlo volume of B(0,1) intersected with B(e1,1), relative to |B|.
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  long inside = 0, hits = 0;
  for (long n = 0; n < 4'000'000; ++n) {
    const double a = u(rng), b = u(rng), c = u(rng);
    if (a * a + b * b + c * c > 1.0) continue;
    ++inside;
    if ((a - 1.0) * (a - 1.0) + b * b + c * c <= 1.0) ++hits;
  }
  EXPECT_NEAR(jr_hat({3, 1.0}, 1.0), static_cast<double>(hits) / inside, 1e-3);
}

TEST(JrHat, RangeAndSymmetry) {
  for (int d = 1; d <= 3; ++d) {
    for (double x = -5.0; x <= 5.0; x += 0.11) {
      const Point p{x, 0.3 * x, -0.2 * x};
      const Point m{-x, -0.3 * x, 0.2 * x};
      const double v = jr_hat({d, 1.7}, p);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      EXPECT_EQ(v, jr_hat({d, 1.7}, m));
    }
  }
}

// r times the given radial moment of j_r over |x| <= 1, d = 3.
double inner_moment(double r, int power) {
  const KernelJr k{3, r};
  const double panel = kPi / r;
  double total = 0.0;
  for (double a = 0.0; a < 1.0; a += panel) {
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double x) { return 4.0 * kPi * x * x * std::pow(x, power) * jr_kernel(k, x); }, a,
        std::min(1.0, a + panel), 0, 0.0);
  }
  return total;
}

TEST(JrKernel, AsymptoticOrders) {
  std::vector<double> outer, second, first;
  for (double r : {10.0, 20.0, 40.0, 80.0}) {
    outer.push_back(r * (1.0 - inner_moment(r, 0)));
    second.push_back(r * inner_moment(r, 2));
    first.push_back(r / std::log(r) * inner_moment(r, 1));
  }
  for (const auto* v : {&outer, &second, &first}) {
    for (std::size_t i = 1; i < v->size(); ++i) {
      const double ratio = (*v)[i] / (*v)[i - 1];
      EXPECT_GT(ratio, 0.5);
      EXPECT_LT(ratio, 2.0);
    }
  }
}

TEST(NoncentralChiSq, MatchesPoissonMixtureOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 400.0);
  for (int n = 0; n < 300; ++n) {
    const int d = 1 + n % 3;
    const double x = u(rng), eta = u(rng);
    EXPECT_NEAR(noncentral_chisq_cdf(d, x, eta), static_cast<double>(oracle::ncx2_cdf(d, x, eta)), 1e-10)
        << d << " " << x << " " << eta;
  }
}

TEST(NoncentralChiSq, SpecialValues) {
  const double phi0 = 0.5, phim2 = 0.5 * std::erfc(2.0 / std::sqrt(2.0));
  EXPECT_NEAR(noncentral_chisq_cdf(1, 1.0, 1.0), phi0 - phim2, 1e-12);
  EXPECT_EQ(noncentral_chisq_cdf(3, 0.0, 5.0), 0.0);
  const double x = 3.0;
  const double central3 = std::erf(std::sqrt(x / 2.0)) - std::sqrt(2.0 * x / kPi) * std::exp(-x / 2.0);
  EXPECT_NEAR(noncentral_chisq_cdf(3, x, 0.0), central3, 1e-14);
}

TEST(NoncentralChiSq, MonotoneAndBounded) {
  for (int d = 1; d <= 3; ++d) {
    for (double eta = 0.0; eta <= 60.0; eta += 3.7) {
      double last = 0.0;
      for (double x = 0.0; x <= 150.0; x += 0.9) {
        const double p = noncentral_chisq_cdf(d, x, eta);
        EXPECT_GE(p, last - 1e-15);
        EXPECT_LE(p, 1.0);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, noncentral_chisq_cdf(d, x, eta * 0.9) + 1e-15);
        last = p;
      }
    }
    EXPECT_NEAR(noncentral_chisq_cdf(d, 1e4, 10.0), 1.0, 1e-15);
  }
}

TEST(GaussCharFn, Values) {
  EXPECT_EQ(gauss_charfn_sq(0.3, 0.0), 1.0);
  EXPECT_EQ(gauss_charfn_sq(0.0, 7.0), 1.0);
  EXPECT_NEAR(gauss_charfn_sq(0.18, 2.0 * kPi), std::exp(-0.18 * 0.18 * 4.0 * kPi * kPi), 1e-15);
}
