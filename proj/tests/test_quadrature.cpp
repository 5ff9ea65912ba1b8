// Copyright 2026 The ellspec Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "ellspec/bessel.hpp"
#include "ellspec/ensemble.hpp"
#include "ellspec/quadrature.hpp"

using namespace ellspec;

namespace {

cplx integrate(const Contour& c, const std::function<cplx(cplx)>& f) {
  cplx acc = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) acc += f(c.nodes[k]) * c.weights[k];
  return acc;
}

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

}  // namespace

TEST(Contour, CircleResidues) {
  const auto c = circle_contour(1.0, 128);
  EXPECT_LT(std::abs(integrate(c, [](cplx z) { return 1.0 / z; }) - 2.0 * kPi * kI), 1e-13);
  EXPECT_LT(std::abs(integrate(c, [](cplx z) { return 1.0 / (z - 0.3); }) - 2.0 * kPi * kI), 1e-13);
  for (int m = 0; m < 5; ++m) EXPECT_LT(std::abs(integrate(c, [m](cplx z) { return std::pow(z, m); })), 1e-13);
  const auto cw = circle_contour(1.0, 128, Orientation::CW);
  EXPECT_LT(std::abs(integrate(cw, [](cplx z) { return 1.0 / z; }) + 2.0 * kPi * kI), 1e-13);
}

TEST(Contour, DilatedEllipse) {
  const auto c0 = dilated_ellipse_contour(0.0, 0.1, 64);
  for (cplx z : c0.nodes) EXPECT_NEAR(std::abs(z), 1.1, 1e-14);
  const auto c = dilated_ellipse_contour(0.5, 0.05, 256);
  double max_re = -1e300;
  for (cplx z : c.nodes) max_re = std::max(max_re, z.real());
  EXPECT_NEAR(max_re, 1.05 * 1.5, 1e-12);
  EXPECT_GT(signed_area(c.nodes), 0.0);
  EXPECT_LT(std::abs(integrate(c, [](cplx) { return 1.0; })), 1e-12);
  EXPECT_LT(std::abs(integrate(c, [](cplx z) { return 1.0 / z; }) - 2.0 * kPi * kI), 1e-12);
  const auto cw = dilated_ellipse_contour(0.5, 0.05, 256, Orientation::CW);
  EXPECT_LT(signed_area(cw.nodes), 0.0);
}

TEST(TraceF, Moments) {
  for (double rho : {0.0, 0.3, 0.6}) {
    const auto p = constant_profiles(5, rho);
    const auto c = dilated_ellipse_contour(rho, 0.1, 128);
    EXPECT_LT(std::abs(trace_f(c, [](cplx) { return 1.0; }, p) - 1.0), 1e-12);
    EXPECT_LT(std::abs(trace_f(c, [](cplx z) { return z; }, p)), 1e-12);
    EXPECT_LT(std::abs(trace_f(c, [](cplx z) { return z * z; }, p) - rho), 1e-12);
  }
}

TEST(TraceF, SecondMomentMatchesSampling) {
  // tr X^2 / N for the sampled ensemble concentrates at the deterministic value.
  const auto p = two_block(200, 1.6, 0.4, 0.4);
  const auto c = circle_contour(3.0, 128);
  const double det = trace_f(c, [](cplx z) { return z * z; }, p).real();
  double acc = 0.0;
  const int reps = 4;
  for (int r = 0; r < reps; ++r) {
    const auto m = sample_elliptic_type(p, derive_seed(11, r));
    acc += (m.x * m.x).trace().real() / 200.0;
  }
  EXPECT_NEAR(acc / reps, det, 0.02);
}

TEST(TraceFG, Identities) {
  for (double rho : {0.0, 0.5}) {
    // The pole of K at b1 conj(b2) = 1 approaches the contour as rho grows; 512 nodes resolve it.
    const auto p = constant_profiles(3, rho);
    const auto c = dilated_ellipse_contour(rho, 0.1, 512);
    EXPECT_LT(std::abs(trace_fg(c, [](cplx) { return 1.0; }, [](cplx) { return 1.0; }, p) - 1.0), 1e-10);
    EXPECT_LT(std::abs(trace_fg(c, [](cplx z) { return z; }, [](cplx z) { return z; }, p) - 1.0), 1e-10);
  }
  const auto p = two_block(6, 1.6, 0.4, 0.3);
  const auto c = circle_contour(2.5, 128);
  // tr X X^* = avg of row sums of S.
  const double rows = p.s.rowwise().sum().mean();
  EXPECT_LT(std::abs(trace_fg(c, [](cplx z) { return z; }, [](cplx z) { return z; }, p) - rows), 1e-10);
}

TEST(TraceFG, ContourInvariance) {
  const auto p = two_block(6, 1.6, 0.4, 0.3);
  auto f = [](cplx z) { return std::exp(0.7 * z); };
  const cplx a = trace_fg(circle_contour(2.0, 128), f, f, p);
  const cplx b = trace_fg(circle_contour(2.6, 256), f, f, p);
  EXPECT_LT(std::abs(a - b), 1e-10 * std::abs(a));
  EXPECT_LT(std::abs(a.imag()), 1e-12 * std::abs(a));
}

TEST(DecayCurve, TimeZeroIsOne) {
  const auto dc = decay_curve(two_block(6, 1.6, 0.4, 0.3), 0.5, {0.0});
  EXPECT_NEAR(dc.deterministic[0], 1.0, 1e-10);
  EXPECT_TRUE(std::isnan(dc.asymptotic[0]));
}

TEST(DecayCurve, MatchesBesselSeries) {
  for (double rho : {0.2, 0.5}) {
    const double g = 1.0 / (1.0 + rho);
    const std::vector<double> ts{1.0, 5.0, 10.0};
    const auto dc = decay_curve(constant_profiles(4, rho), g, ts);
    EXPECT_TRUE(dc.converged);
    EXPECT_EQ(dc.contour_kind, "dilated-ellipse");
    for (std::size_t j = 0; j < ts.size(); ++j) {
      const double ref = decay_series(rho, g, ts[j]).value;
      EXPECT_NEAR(dc.deterministic[j] / ref, 1.0, 1e-6) << rho << " t=" << ts[j];
    }
  }
}

TEST(DecayCurve, CriticalSlopeIsMinusHalf) {
  const auto p = two_block(6, 1.6, 0.4, 0.3);
  const double zs = find_zeta_star(p);
  const std::vector<double> ts{20.0, 40.0};
  const auto dc = decay_curve(p, 1.0 / zs, ts);
  EXPECT_TRUE(dc.converged);
  const double slope = std::log(dc.deterministic[1] / dc.deterministic[0]) / std::log(2.0);
  EXPECT_NEAR(slope, -0.5, 0.05);
  for (std::size_t j = 0; j < ts.size(); ++j) EXPECT_NEAR(dc.deterministic[j] / dc.asymptotic[j], 1.0, 0.1);
}

TEST(DecayCurve, RejectsSupercriticalG) {
  EXPECT_THROW(decay_curve(constant_profiles(3, 0.5), 0.7, {1.0}), InputError);
}
