// Copyright 2026 The ellspec Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "ellspec/ensemble.hpp"

using namespace ellspec;

namespace {

CorrelationProfile two_block(int n, double lo, double hi) {
  CorrelationProfile p;
  p.s.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p.s(i, j) = (j < n / 2 ? hi : lo) / n;
  p.t = CMat::Zero(n, n);
  p.rho_bound = 0.0;
  return p;
}

}  // namespace

TEST(ConstantProfiles, IndependentCase) {
  auto p = constant_profiles(4, 0.0);
  EXPECT_TRUE((p.s.array() == 0.25).all());
  EXPECT_TRUE((p.t.array() == cplx(0.0)).all());
}

TEST(ConstantProfiles, SmallDirect) {
  auto p = constant_profiles(2, 0.5);
  EXPECT_DOUBLE_EQ(p.s(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(p.t(1, 0).real(), 0.25);
  EXPECT_DOUBLE_EQ(p.rho_bound, 0.5);
}

TEST(ConstantProfiles, SaturatesCorrelationBound) {
  auto p = constant_profiles(100, cplx(0.0, 0.5));
  EXPECT_NEAR(std::abs(p.t(3, 7)), 0.005, 1e-15);
  EXPECT_NEAR(std::abs(p.t(3, 7)), 0.5 * std::sqrt(p.s(3, 7) * p.s(7, 3)), 1e-15);
}

TEST(ConstantProfiles, RejectsUnitRho) {
  EXPECT_THROW(constant_profiles(3, 1.0), InputError);
  EXPECT_THROW(constant_profiles(0, 0.1), InputError);
}

TEST(ValidateProfile, ConstantPasses) {
  auto r = validate_profile(constant_profiles(10, 0.5), 1);
  EXPECT_NEAR(r.rho_hat, 0.5, 1e-14);
  EXPECT_NEAR(r.c0_s, 1.0, 1e-12);
  EXPECT_NEAR(r.c0_ss, 1.0, 1e-12);
  EXPECT_TRUE(r.ok());
  EXPECT_FALSE(r.holder_checked);
}

TEST(ValidateProfile, ZeroRowFailsPrimitivity) {
  auto p = constant_profiles(6, 0.0);
  p.s.row(2).setZero();
  for (int L : {1, 2, 4}) {
    auto r = validate_profile(p, L);
    EXPECT_EQ(r.c0_s, 0.0);
    EXPECT_FALSE(r.pass_primitivity);
  }
}

TEST(ValidateProfile, CorrelationViolation) {
  auto p = constant_profiles(4, 0.0);
  p.t(0, 1) = p.t(1, 0) = 1.1 * std::sqrt(p.s(0, 1) * p.s(1, 0));
  p.rho_bound = 0.99;
  auto r = validate_profile(p, 1);
  EXPECT_NEAR(r.rho_hat, 1.1, 1e-12);
  EXPECT_FALSE(r.pass_non_hermitian);
  EXPECT_FALSE(r.ok());
}

TEST(Sampling, SeedDeterminism) {
  auto a = sample_elliptic({30, 0.4, true}, 99);
  auto b = sample_elliptic({30, 0.4, true}, 99);
  EXPECT_TRUE(a.x == b.x);
  auto p = constant_profiles(20, cplx(0.3, 0.2));
  EXPECT_TRUE(sample_elliptic_type(p, 5).x == sample_elliptic_type(p, 5).x);
  EXPECT_FALSE(sample_elliptic_type(p, 5).x == sample_elliptic_type(p, 6).x);
}

TEST(Sampling, UnitRhoIsHermitian) {
  auto s = sample_elliptic({40, 1.0, true}, 3);
  EXPECT_TRUE(s.x == s.x.adjoint());
}

// Pair moments pooled over the (i, j) pairs of many matrices.
struct PairMoments {
  double var_ij = 0, var_ji = 0;
  cplx cross = 0;
  double se_cross = 0;
};

template <typename Sampler>
PairMoments pooled(Sampler&& sampler, int n, int reps) {
  PairMoments m;
  double count = 0;
  double m2 = 0;
  for (int r = 0; r < reps; ++r) {
    CMat x = sampler(r);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const cplx c = x(i, j) * x(j, i) * static_cast<double>(n);
        m.var_ij += std::norm(x(i, j)) * n;
        m.var_ji += std::norm(x(j, i)) * n;
        m.cross += c;
        m2 += std::norm(c);
        count += 1;
      }
  }
  m.var_ij /= count;
  m.var_ji /= count;
  m.cross /= count;
  m.se_cross = std::sqrt((m2 / count - std::norm(m.cross)) / count);
  return m;
}

TEST(Sampling, EllipticMomentsIndependent) {
  // 10^4 pairs: n = 142 gives 10011 pairs in one matrix.
  auto m = pooled([](int r) { return sample_elliptic({142, 0.0, true}, 1000 + r).x; }, 142, 1);
  EXPECT_LT(std::abs(m.cross), 4.0 * m.se_cross);
  EXPECT_LT(std::abs(m.cross), 4.0 / std::sqrt(10011.0));
}

TEST(Sampling, EllipticMomentsCorrelated) {
  for (bool gaussian : {true, false}) {
    auto m = pooled([&](int r) { return sample_elliptic({500, 0.5, gaussian}, 7 + r).x; }, 500, 1);
    EXPECT_LT(std::abs(m.cross - 0.5), 4.0 * m.se_cross) << "gaussian=" << gaussian;
    EXPECT_NEAR(m.var_ij, 1.0, 0.02);
    EXPECT_NEAR(m.var_ji, 1.0, 0.02);
  }
}

TEST(Sampling, EllipticTypeMatchesConstant) {
  const cplx rho(0.3, -0.4);
  auto p = constant_profiles(200, rho);
  auto m = pooled([&](int r) { return sample_elliptic_type(p, 40 + r).x; }, 200, 1);
  EXPECT_LT(std::abs(m.cross - rho), 4.0 * m.se_cross);
  EXPECT_NEAR(m.var_ij, 1.0, 0.03);
}

TEST(Sampling, BlockVariancesPerClass) {
  const int n = 4, reps = 10000;
  CorrelationProfile p;
  p.s.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p.s(i, j) = ((i + j) % 2 == 0 ? 1.0 : 2.0) / n;
  p.t = CMat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p.t(i, j) = 0.5 * std::sqrt(p.s(i, j) * p.s(j, i));
  p.rho_bound = 0.5;
  Mat var = Mat::Zero(n, n), var2 = Mat::Zero(n, n);
  CMat cross = CMat::Zero(n, n);
  for (int r = 0; r < reps; ++r) {
    CMat x = sample_elliptic_type(p, derive_seed(77, r)).x;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        var(i, j) += std::norm(x(i, j));
        var2(i, j) += std::norm(x(i, j)) * std::norm(x(i, j));
        cross(i, j) += x(i, j) * x(j, i);
      }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double mean = var(i, j) / reps;
      const double sd = std::sqrt((var2(i, j) / reps - mean * mean) / reps);
      EXPECT_LT(std::abs(mean - p.s(i, j)), 4.0 * sd) << i << "," << j;
      if (i != j) {
        EXPECT_NEAR(std::abs(cross(i, j) / double(reps) - p.t(i, j)), 0.0, 4.0 * p.s(i, j) / std::sqrt(reps));
      }
    }
}

TEST(Sampling, GaussianEllipticCrossMomentIsExact) {
  // x_ij x_ji = sigma^2 (rho |z1|^2 + sqrt(1-|rho|^2) z1 z2); the second term has
  // zero mean, so the expectation is exactly rho/n. Check the covariance
  // algebra of the 4x4 factor instead of sampling.
  const cplx rho(0.2, 0.6);
  Eigen::Matrix4d c = pair_covariance(0.5, 0.5, rho * 0.5);
  Eigen::Matrix4d f;
  ASSERT_TRUE(detail::psd_factor<4>(c, f));
  EXPECT_LT((f * f.transpose() - c).norm(), 1e-15);
  // E x_ij x_ji = (E ac - E bd) + i (E ad + E bc)
  const cplx recovered(c(0, 2) - c(1, 3), c(0, 3) + c(1, 2));
  EXPECT_NEAR(std::abs(recovered - rho * 0.5), 0.0, 1e-15);
}

TEST(Sampling, RejectsInconsistentCovariance) {
  auto p = constant_profiles(3, 0.0);
  p.t(0, 1) = p.t(1, 0) = 2.0 * p.s(0, 1);
  EXPECT_THROW(sample_elliptic_type(p, 1), InputError);
}

TEST(ReduceProfile, TwoBlockCollapses) {
  auto p = two_block(500, 0.5, 1.5);
  auto r = reduce_profile(p);
  EXPECT_EQ(r.factor, 250);
  ASSERT_EQ(r.profile.n(), 2);
  EXPECT_DOUBLE_EQ(r.profile.s(0, 0), 0.75);
  EXPECT_DOUBLE_EQ(r.profile.s(0, 1), 0.25);
  auto c = reduce_profile(constant_profiles(64, 0.5));
  ASSERT_EQ(c.profile.n(), 1);
  EXPECT_DOUBLE_EQ(c.profile.s(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(c.profile.t(0, 0).real(), 0.5);
}

TEST(ReduceProfile, IrreducibleIsUnchanged) {
  CorrelationProfile p;
  p.s = Mat::Random(5, 5).cwiseAbs();
  p.t = CMat::Zero(5, 5);
  auto r = reduce_profile(p);
  EXPECT_EQ(r.factor, 1);
  EXPECT_TRUE(r.profile.s == p.s);
}
