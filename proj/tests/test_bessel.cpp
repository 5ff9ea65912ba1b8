// Copyright 2026 The ellspec Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ellspec/bessel.hpp"

using namespace ellspec;

namespace {

// e^{-|Re z|} I_k(z) from (1/pi) int_0^pi e^{z cos th} cos(k th) d th; the
// periodic trapezoidal rule converges geometrically.
cplx integral_scaled(int k, cplx z, int m = 4000) {
  cplx acc = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double th = kPi * i / m;
    const double w = (i == 0 || i == m) ? 0.5 : 1.0;
    acc += w * std::exp(z * std::cos(th) - std::abs(z.real())) * std::cos(k * th);
  }
  return acc / static_cast<double>(m);
}

}  // namespace

TEST(BesselI, AtZero) {
  EXPECT_EQ(bessel_i(0, 0.0), cplx(1.0));
  for (int k = 1; k < 5; ++k) EXPECT_EQ(bessel_i(k, 0.0), cplx(0.0));
}

TEST(BesselI, ConjugationSymmetry) {
  for (cplx z : {cplx(1.7, 0.3), cplx(-4.0, 12.0), cplx(30.0, -25.0)})
    for (int k = 0; k < 12; ++k) EXPECT_LT(std::abs(bessel_i(k, std::conj(z)) - std::conj(bessel_i(k, z))), 1e-13 * std::abs(bessel_i(k, z)) + 1e-300);
}

TEST(BesselI, ThreeTermRecurrence) {
  const cplx z(1.7, 0.3);
  for (int j = 1; j <= 10; ++j) {
    const cplx lhs = bessel_i(j - 1, z) - bessel_i(j + 1, z);
    const cplx rhs = 2.0 * j / z * bessel_i(j, z);
    EXPECT_LT(std::abs(lhs - rhs), 1e-10 * std::abs(rhs));
  }
}

TEST(BesselI, MatchesIntegralRepresentation) {
  for (cplx z : {cplx(0.5, 0.0), cplx(3.0, -2.0), cplx(19.0, 1.0), cplx(0.0, 15.0), cplx(25.0, 0.0), cplx(0.0, 25.0),
                 cplx(30.0, 40.0), cplx(-50.0, 3.0), cplx(120.0, 0.0), cplx(-8.0, -60.0)}) {
    const auto seq = bessel_i_scaled_sequence(40, z);
    for (int k : {0, 1, 2, 5, 13, 40}) {
      const cplx oracle = integral_scaled(k, z);
      if (std::abs(oracle) < 1e-12) continue;  // below the quadrature's absolute accuracy
      EXPECT_LT(std::abs(seq[k] - oracle), 1e-12 * std::abs(oracle) + 1e-15) << "k=" << k << " z=" << z;
      EXPECT_LT(std::abs(bessel_i_scaled(k, z) - oracle), 1e-12 * std::abs(oracle) + 1e-15);
    }
  }
}

TEST(BesselI, NegativeOrderAndReflection) {
  const cplx z(-3.0, 2.0);
  for (int k = 0; k < 6; ++k) {
    EXPECT_EQ(bessel_i(-k, z), bessel_i(k, z));
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    EXPECT_LT(std::abs(bessel_i(k, -z) - sign * bessel_i(k, z)), 1e-13 * std::abs(bessel_i(k, z)));
  }
}

TEST(BesselI, LargeArgumentAsymptotics) {
  // I_m(x) sqrt(2 pi x) e^{-x} = 1 - (4m^2 - 1)/(8x) + O(x^-2); at x = 500 the
  // first correction is 2.5e-4 for m = 0 but 3.75e-3 for m = 2.
  for (int m : {0, 2}) {
    for (double x : {500.0, 1e5}) {
      const double v = bessel_i_scaled(m, x).real() * std::sqrt(2 * kPi * x);
      EXPECT_NEAR(v, 1.0 - (4.0 * m * m - 1.0) / (8.0 * x), 2e-5) << m << " " << x;
    }
    EXPECT_NEAR(bessel_i_scaled(m, 1e5).real() * std::sqrt(2 * kPi * 1e5), 1.0, 1e-3);
  }
  EXPECT_NEAR(bessel_i_scaled(0, 500.0).real() * std::sqrt(2 * kPi * 500.0), 1.0, 1e-3);
}

TEST(BesselI, OverflowFlagged) {
  try {
    bessel_i(0, cplx(701.0, 0.0));
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Overflow);
  }
  EXPECT_NO_THROW(bessel_i_scaled(0, cplx(5000.0, 1.0)));
}

TEST(DecaySeries, SmallTime) {
  for (cplx rho : {cplx(0.5), cplx(0.1, 0.7)}) {
    auto r = decay_series(rho, 0.8, 1e-6);
    EXPECT_NEAR(r.value, 1.0, 1e-5);
  }
  EXPECT_EQ(decay_series(0.5, 1.0, 0.0).value, 1.0);
}

TEST(DecaySeries, BranchIndependent) {
  const cplx rho(0.3, 0.4);
  const double g = 0.9, t = 7.0, tg = t * g;
  cplx w = -2.0 * std::sqrt(rho) * tg;  // the other square root
  double oracle = 0.0;
  for (int j = 1; j < 200; ++j) oracle += std::pow(std::abs(rho), -j) * std::norm(j / tg * bessel_i(j, w));
  oracle *= std::exp(-2 * t);
  EXPECT_NEAR(decay_series(rho, g, t).value / oracle, 1.0, 1e-12);
}

TEST(DecaySeries, Diagnostics) {
  auto r = decay_series(0.5, 2.0 / 3.0, 50.0, 1e-14);
  EXPECT_GT(r.value, 0.0);
  EXPECT_LE(r.truncation_bound, 1e-14);
  EXPECT_GT(r.terms_used, std::exp(1.0) * std::sqrt(0.5) * 50.0 * 2.0 / 3.0);
}

TEST(DecaySeries, AsymptoticRatio) {
  // At critical g the ratio is 1 + [(1+rho^2) + 15 c2] / (8 W (1-rho)^2) + O(W^-2),
  // c2 = 2 (rho + rho^2)/(1 + rho), W = 2t. High-precision reference values at
  // t = 200: 1.0034350, 1.0202942, 1.1995371.
  const double reference[3] = {1.003435008620644, 1.020294175921279, 1.199537111916311};
  int k = 0;
  for (double rho : {0.2, 0.5, 0.8}) {
    const double g = critical_g(rho);
    const double ratio = std::exp(decay_series(rho, g, 200.0).log_value - log_decay_asymptotic(rho, g, 200.0));
    EXPECT_NEAR(ratio, reference[k++], 1e-10);
    const double c2 = 2 * (rho + rho * rho) / (1 + rho);
    for (double t : {2000.0, 20000.0}) {
      const double r = std::exp(decay_series(rho, g, t).log_value - log_decay_asymptotic(rho, g, t));
      const double first = (1 + rho * rho + 15 * c2) / (8 * 2 * t * (1 - rho) * (1 - rho));
      EXPECT_NEAR(r - 1.0, first, 2.0 * first * first + 1e-12) << rho << " " << t;
    }
  }
  EXPECT_NEAR(std::exp(decay_series(0.2, critical_g(0.2), 200.0).log_value - log_decay_asymptotic(0.2, critical_g(0.2), 200.0)), 1.0, 0.02);
}

TEST(DecayAsymptotic, Coefficients) {
  // Real rho: coefficient (1 - rho)^2; at critical g the value is coeff / (2 sqrt(pi t)).
  for (double rho : {0.0, 0.25, 0.5}) {
    const double g = critical_g(rho);
    for (double t : {1.0, 10.0}) {
      const double expected = (1 - rho) * (1 - rho) / (2.0 * std::sqrt(kPi * t));
      EXPECT_NEAR(decay_asymptotic(rho, g, t) / expected, 1.0, 1e-13);
    }
  }
  EXPECT_NEAR(critical_g(0.5), 1.0 / 1.5, 1e-15);
}

TEST(DecaySeries, FullLatticeIdentity) {
  for (cplx rho : {cplx(0.5), cplx(0.3, -0.5), cplx(-0.4, 0.1)}) {
    for (double t : {0.5, 3.0, 12.0}) {
      const double g = 0.7, tg = t * g;
      const cplx w = 2.0 * std::sqrt(rho) * tg;
      double neg = 0.0;  // j <= -1: |rho|^{|j|} (j/tg)^2 |I_j|^2
      for (int j = 1; j < 400; ++j) neg += std::pow(std::abs(rho), j) * std::norm(j / tg * bessel_i(j, w));
      neg *= std::exp(-2.0 * t);
      const double lattice = decay_series(rho, g, t).value + neg;
      EXPECT_NEAR(lattice / graf_closed_form(rho, g, t), 1.0, 1e-8) << rho << " t=" << t;
    }
  }
}

TEST(NegativeTail, BoundHolds) {
  const cplx rho = 0.5;
  const double g = 2.0 / 3.0, t = 20.0, tg = t * g;
  const cplx w = 2.0 * std::sqrt(rho) * tg;
  double sum = 0.0;
  for (int j = 1; j <= 50; ++j) sum += std::pow(0.5, j) * std::norm(j / tg * bessel_i(j, w));
  EXPECT_LE(sum, negative_tail_bound(rho, g, t));
}

TEST(NegativeTail, SmallRelativeToAsymptotic) {
  const double g = 2.0 / 3.0;
  double prev = 1e300;
  for (double t : {20.0, 40.0, 80.0}) {
    const double ratio = negative_tail_bound(0.5, g, t) * std::exp(-2 * t) / decay_asymptotic(0.5, g, t);
    EXPECT_LT(ratio, prev);
    prev = ratio;
  }
  EXPECT_LT(prev, 1e-4);
  EXPECT_LT(negative_tail_bound(1e-12, g, 5.0), 1e-10);
}

TEST(Graf, ClassicalSpecialCase) {
  auto [lhs, rhs] = graf_check(1.0, 1.0, 1.0, 0, 40);
  EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(rhs - bessel_i(0, 2.0)), 0.0, 1e-14);
}

TEST(Graf, NumericIdentity) {
  auto [lhs, rhs] = graf_check(1.0, 2.0, 1.5, 0, 60);
  EXPECT_LT(std::abs(lhs - rhs), 1e-10);
}

TEST(Graf, LargeCWithZeroY) {
  for (int nu : {0, 1, 2}) {
    auto [lhs, rhs] = graf_check(1.3, 0.0, 1e6, nu, 20);
    EXPECT_LT(std::abs(lhs - bessel_i(nu, 1.3)), 1e-14);
    EXPECT_LT(std::abs(rhs - bessel_i(nu, 1.3)), 1e-14);
  }
}

TEST(Graf, RandomArguments) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> r(0.0, 3.0), ph(0.0, 2 * kPi), c(0.5, 2.0);
  std::uniform_int_distribution<int> nu(0, 2);
  for (int k = 0; k < 20; ++k) {
    const cplx x = std::polar(r(rng), ph(rng)), y = std::polar(r(rng), ph(rng));
    const cplx cc = std::polar(c(rng), ph(rng));
    auto [lhs, rhs] = graf_check(x, y, cc, nu(rng), 60);
    EXPECT_LT(std::abs(lhs - rhs), 1e-10) << x << " " << y << " " << cc;
  }
}

TEST(DecaySeries, CriticalSlopeApproachesMinusHalf) {
  // log-log slope of the critical decay over a decade starting at t0; the 1/t
  // correction (coefficient ~4.06 at rho = 0.5) keeps it at -0.567 on [20, 200].
  const double g = critical_g(0.5);
  auto slope = [&](double t0) {
    const int m = 60;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 0; k < m; ++k) {
      const double t = t0 * std::pow(10.0, k / (m - 1.0));
      const double x = std::log(t), y = decay_series(0.5, g, t).log_value;
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
  };
  EXPECT_NEAR(slope(20.0), -0.5666, 1e-3);
  EXPECT_NEAR(slope(200.0), -0.5073, 1e-3);
  EXPECT_NEAR(slope(2000.0), -0.5007, 1e-3);
}
