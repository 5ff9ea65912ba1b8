// Copyright 2026 The ellspec Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ellspec/kernel.hpp"

using namespace ellspec;

namespace {

CorrelationProfile two_block(int n, double hi, double lo, double rho) {
  CorrelationProfile p;
  p.s.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p.s(i, j) = (j < n / 2 ? hi : lo) / n;
  p.t.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p.t(i, j) = rho * std::sqrt(p.s(i, j) * p.s(j, i));
  p.rho_bound = rho;
  return p;
}

// Real point zeta > zeta_star with lambda(zeta, w2) = 0, by bisection in w2.
double zbar2_on_curve(const CorrelationProfile& p, const SingularityData& sd, double zeta1, double lo, double hi) {
  auto f = [&](double w) { return lambda_near_zero(p, zeta1, w, sd.b, sd.v_r); };
  double flo = f(lo);
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Kernel, IidValueAtTwo) {
  EXPECT_NEAR(std::abs(kernel_elliptic(2.0, 2.0, 0.0) - 1.0 / 3.0), 0.0, 1e-15);
  const auto k = kernel_general(2.0, 2.0, constant_profiles(6, 0.0));
  EXPECT_NEAR(std::abs(k.value - 1.0 / 3.0), 0.0, 1e-12);
}

TEST(Kernel, DecaysAtInfinity) {
  for (double phi : {0.0, 1.0, 2.5}) {
    const cplx big = std::polar(1e3, phi);
    const double k1 = std::abs(kernel_elliptic(big, 2.0, 0.3));
    const double k2 = std::abs(kernel_elliptic(10.0 * big, 2.0, 0.3));
    EXPECT_NEAR(k1 / k2, 10.0, 1e-2);
  }
}

TEST(Kernel, GeneralMatchesEllipticForm) {
  const cplx rho(0.5, 0.0);
  const auto p = constant_profiles(40, rho);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> r(1.6, 3.0), ph(0.0, 2 * kPi);
  for (int k = 0; k < 50; ++k) {
    // Outside the ellipse with semi-axes 1.5 and 0.5.
    const cplx z1 = std::polar(r(rng), ph(rng)), z2 = std::polar(r(rng), ph(rng));
    const cplx exact = kernel_elliptic(z1, z2, rho);
    EXPECT_LT(std::abs(kernel_general(z1, z2, p).value - exact), 1e-10 * std::max(1.0, std::abs(exact)));
  }
}

TEST(Kernel, HermitianSymmetry) {
  const auto p = two_block(8, 1.5, 0.5, 0.3);
  const cplx z1(2.1, 0.7), z2(-1.4, 1.9);
  const cplx a = kernel_general(z1, z2, p).value, b = kernel_general(z2, z1, p).value;
  EXPECT_LT(std::abs(a - std::conj(b)), 1e-12);
  EXPECT_LT(std::abs(kernel_elliptic(z1, z2, cplx(0.2, 0.1)) - std::conj(kernel_elliptic(z2, z1, cplx(0.2, 0.1)))),
            1e-14);
}

TEST(Kernel, IndependentFormFlatProfile) {
  const Mat s = Mat::Constant(10, 10, 0.1);
  const cplx z1(1.5, 0.5), z2(0.3, -2.0);
  EXPECT_LT(std::abs(kernel_independent(z1, z2, s) - 1.0 / (z1 * std::conj(z2) - 1.0)), 1e-14);
}

TEST(Kernel, IndependentFormBlockDiagonal) {
  // S = diag(a J, c J) / n on two halves: K = ((w - a/2)^{-1} + (w - c/2)^{-1}) / 2.
  const int n = 12;
  const double a = 3.0, c = 1.0;
  Mat s = Mat::Zero(n, n);
  s.topLeftCorner(n / 2, n / 2).setConstant(a / n);
  s.bottomRightCorner(n / 2, n / 2).setConstant(c / n);
  const cplx z1(1.8, 0.4), z2(1.1, 1.3);
  const cplx w = z1 * std::conj(z2);
  const cplx oracle = 0.5 * (1.0 / (w - a / 2) + 1.0 / (w - c / 2));
  EXPECT_LT(std::abs(kernel_independent(z1, z2, s) - oracle), 1e-13);
  CorrelationProfile p;
  p.s = s;
  p.t = CMat::Zero(n, n);
  p.rho_bound = 0.0;
  EXPECT_LT(std::abs(kernel_general(z1, z2, p).value - oracle), 1e-11);
}

TEST(Kernel, PoleContactIsReported) {
  try {
    kernel_elliptic(1.0, 1.0, 0.0);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PoleContact);
  }
}

TEST(Perron, FlatMatrix) {
  const Mat j = Mat::Constant(7, 7, 1.0 / 7);
  const auto pp = perron_pair(j, 0, 1e-14);
  EXPECT_NEAR(pp.radius, 1.0, 1e-13);
  for (int i = 0; i < 7; ++i) {
    EXPECT_NEAR(pp.right[i] / pp.right[0], 1.0, 1e-12);
    EXPECT_NEAR(pp.left[i] / pp.left[0], 1.0, 1e-12);
  }
  EXPECT_NEAR(inner(pp.left, pp.right), 1.0, 1e-13);
}

TEST(CoefficientA, ConstantProfiles) {
  EXPECT_NEAR(coefficient_A(constant_profiles(5, 0.0)).a_coeff, 1.0 / std::sqrt(2.0), 1e-10);
  EXPECT_NEAR(coefficient_A(constant_profiles(5, 0.5)).a_coeff, 0.144338, 1e-6);
  for (double rho : {0.0, 0.25, 0.5}) {
    const auto sd = coefficient_A(constant_profiles(4, rho));
    const double g = 1.0 / (1.0 + rho);
    EXPECT_NEAR(sd.a_coeff, (1 - rho) * (1 - rho) * std::sqrt(g / 2.0), 1e-9) << rho;
    EXPECT_LT(sd.a_discrepancy, 1e-8) << rho;
    EXPECT_NEAR(sd.dz2, -1.0, 1e-14);
    EXPECT_LE(sd.f_norm, rho + 1e-12);
    EXPECT_EQ(sd.b.size(), 4);
  }
}

TEST(CoefficientA, TwoExpressionsAgreeOnBlockProfile) {
  const auto sd = coefficient_A(two_block(8, 1.6, 0.4, 0.35));
  EXPECT_GT(sd.a_coeff, 0.0);
  EXPECT_TRUE(std::isfinite(sd.a_coeff));
  EXPECT_LT(sd.a_discrepancy, 1e-7);
  EXPECT_LT(sd.f_norm, 1.0);
  EXPECT_EQ(sd.v_r.size(), 8);
}

TEST(CoefficientA, RejectsNegativeT) {
  try {
    coefficient_A(constant_profiles(3, -0.2));
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotApplicable);
  }
}

TEST(CoefficientA, DerivativesMatchFiniteDifferences) {
  const auto p = two_block(6, 1.6, 0.4, 0.3);
  const auto sd = coefficient_A(p);
  const double zs = sd.zeta_star, h = 1e-4;
  // Off the curve lambda = 0: d lambda / d w2 at (zeta*, zeta*).
  const double dl = (lambda_near_zero(p, zs + 2 * h, zs + 3 * h, sd.b, sd.v_r) -
                     lambda_near_zero(p, zs + 2 * h, zs + h, sd.b, sd.v_r)) / (2 * h);
  EXPECT_NEAR(dl, sd.d2_lambda, 2e-3 * std::abs(sd.d2_lambda));
  // Along the curve: conj z2(zeta1) = zeta* - (zeta1 - zeta*) + d2z2 (zeta1 - zeta*)^2 / 2 + ...
  // Sample zeta1 > zeta* and solve for w2 on the other side of zeta*.
  const double e = 2e-3;
  const double w_a = zbar2_on_curve(p, sd, zs + e, zs - 4 * e, zs - 0.2 * e);
  const double w_b = zbar2_on_curve(p, sd, zs + 2 * e, zs - 6 * e, zs - 1.0 * e);
  // Quadratic fit through (0, zs), (e, w_a), (2e, w_b).
  const double second = (w_b - 2 * w_a + zs) / (e * e);
  EXPECT_NEAR(second, sd.d2z2, 0.05 * std::abs(sd.d2z2));
}
