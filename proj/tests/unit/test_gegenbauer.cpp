#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "calderon/errors.hpp"
#include "calderon/gegenbauer.hpp"

using namespace calderon;

namespace {

// Explicit sum C_m^l(z) = sum_k (-1)^k Gamma(m - k + l) / (Gamma(l) k! (m - 2k)!) (2z)^{m - 2k}.
cdouble explicit_sum(int m, double l, cdouble z) {
  cdouble s = 0.0;
  for (int k = 0; 2 * k <= m; ++k) {
    const double c = std::exp(std::lgamma(m - k + l) - std::lgamma(l) - std::lgamma(k + 1.0) -
                              std::lgamma(m - 2.0 * k + 1.0));
    s += (k % 2 ? -c : c) * std::pow(2.0 * z, m - 2 * k);
  }
  return s;
}

std::vector<cdouble> complex_samples(int n, double radius, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-radius, radius);
  std::vector<cdouble> out;
  while (static_cast<int>(out.size()) < n) {
    const cdouble z(u(rng), u(rng));
    if (std::abs(z) <= radius) out.push_back(z);
  }
  return out;
}

}  // namespace

TEST(Gegenbauer, DegreeZeroIsOne) {
  EXPECT_EQ(gegenbauer({0, 0.5}, cdouble(0.3, 0.7)), cdouble(1.0));
  EXPECT_EQ(gegenbauer({0, 2.5}, cdouble(-4, 1)), cdouble(1.0));
}

TEST(Gegenbauer, LegendreValueAtOne) { EXPECT_NEAR(std::abs(gegenbauer({2, 0.5}, 1.0) - 1.0), 0.0, 1e-15); }

TEST(Gegenbauer, DegreeOneIsTwoLambdaZ) {
  EXPECT_NEAR(std::abs(gegenbauer({1, 0.5}, cdouble(0, 2)) - cdouble(0, 2)), 0.0, 1e-15);
}

TEST(Gegenbauer, MatchesExplicitSum) {
  for (double l : {0.5, 1.0, 1.5, 2.5})
    for (int m = 0; m <= 12; ++m)
      for (const auto z : complex_samples(10, 1.5, m + 17)) {
        const cdouble a = gegenbauer({m, l}, z), b = explicit_sum(m, l, z);
        EXPECT_LE(std::abs(a - b), 1e-11 * std::max(1.0, std::abs(b))) << m << " " << l;
      }
}

TEST(Gegenbauer, RejectsBadSpec) {
  EXPECT_THROW(gegenbauer({-1, 0.5}, 0.2), RangeError);
  EXPECT_THROW(gegenbauer({17, 0.5}, 0.2), RangeError);
  EXPECT_THROW(gegenbauer({2, 0.25}, 0.2), RangeError);
  EXPECT_NEAR(GegenbauerSpec::for_dimension(3, 5).order, 1.5, 0.0);
}

TEST(GegenbauerDerivative, DegreeOneIsOne) {
  EXPECT_NEAR(std::abs(gegenbauer_derivative({1, 0.5}, cdouble(0.7, -0.2)) - 1.0), 0.0, 1e-15);
  EXPECT_EQ(gegenbauer_derivative({0, 0.5}, 0.4), cdouble(0.0));
}

TEST(GegenbauerDerivative, MatchesFiniteDifferences) {
  const double step = 1e-5;
  for (double l : {0.5, 1.0, 1.5})
    for (int m = 1; m <= 8; ++m)
      for (const auto z : complex_samples(20, 2.0, 100 + m)) {
        const GegenbauerSpec s{m, l};
        const cdouble fd = (gegenbauer(s, z + step) - gegenbauer(s, z - step)) / (2.0 * step);
        const cdouble d = gegenbauer_derivative(s, z);
        EXPECT_LE(std::abs(fd - d), 1e-8 * std::max(1.0, std::abs(d)));
      }
}

TEST(GegenbauerDerivative, CubicLegendreAtPointFour) {
  const double h = 1e-5;
  const GegenbauerSpec s{3, 0.5};
  const cdouble fd = (gegenbauer(s, 0.4 + h) - gegenbauer(s, 0.4 - h)) / (2 * h);
  EXPECT_LE(std::abs(fd - gegenbauer_derivative(s, 0.4)), 1e-8);
  EXPECT_NEAR(gegenbauer_derivative(s, 0.4).real(), 0.5 * (15 * 0.16 - 3), 1e-14);
}

TEST(OdeResidual, SpecificPoints) {
  EXPECT_LE(std::abs(ode_residual(GegenbauerSpec::for_dimension(4, 3), 0.5)), 1e-9);
  EXPECT_LE(std::abs(ode_residual(GegenbauerSpec::for_dimension(2, 5), cdouble(1, 1))), 1e-8);
  EXPECT_EQ(ode_residual(GegenbauerSpec::for_dimension(0, 3), cdouble(3, -2)), cdouble(0.0));
}

TEST(OdeResidualProperty, BoundOnComplexSample) {
  for (int n : {3, 4, 5})
    for (int m = 0; m <= 8; ++m)
      for (const auto z : complex_samples(100, 2.0, 7 * n + m)) {
        const double bound = 1e-9 * std::pow(1.0 + std::abs(z), m);
        EXPECT_LE(std::abs(ode_residual(GegenbauerSpec::for_dimension(m, n), z)), bound);
      }
}

TEST(GegenbauerProperty, Parity) {
  for (double l : {0.5, 1.0, 1.5})
    for (int m = 0; m <= 10; ++m)
      for (const auto z : complex_samples(10, 2.0, 300 + m)) {
        const cdouble a = gegenbauer({m, l}, -z), b = gegenbauer({m, l}, z);
        EXPECT_LE(std::abs(a - (m % 2 ? -b : b)), 1e-12 * std::max(1.0, std::abs(b)));
      }
}

TEST(Endpoints, LegendreAndDegreeZero) {
  const auto e = endpoint_nonvanishing(GegenbauerSpec::for_dimension(3, 3));
  EXPECT_NEAR(std::abs(e.plus_one - 1.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(e.minus_one + 1.0), 0.0, 1e-14);
  const auto z = endpoint_nonvanishing({0, 0.5});
  EXPECT_EQ(z.plus_one, cdouble(1.0));
  EXPECT_EQ(z.minus_one, cdouble(1.0));
  const auto f = endpoint_nonvanishing(GegenbauerSpec::for_dimension(5, 4));
  EXPECT_TRUE(f.nonvanishing);
  EXPECT_GT(std::abs(f.plus_one), 0.0);
}

TEST(EndpointsProperty, NonvanishingUpToDegreeTen) {
  for (int n : {3, 4, 5})
    for (int m = 0; m <= 10; ++m) EXPECT_TRUE(endpoint_nonvanishing(GegenbauerSpec::for_dimension(m, n)).nonvanishing);
}

TEST(GegenbauerProperty, ValueAndSlopeNeverVanishTogetherOnInterval) {
  for (int n : {3, 4, 5})
    for (int m = 0; m <= 10; ++m) {
      double mn = 1e300;
      for (int i = 0; i <= 2000; ++i) {
        const double t = -1.0 + 2.0 * i / 2000.0;
        const auto s = GegenbauerSpec::for_dimension(m, n);
        mn = std::min(mn, std::abs(gegenbauer(s, t)) + std::abs(gegenbauer_derivative(s, t)));
      }
      EXPECT_GT(mn, 1e-10);
    }
}
