/* Copyright 2026 The ellspec Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Correlation profiles (S, T) of elliptic-type random matrices and samplers
// for matrices with those second moments.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ellspec/common.hpp"

namespace ellspec {

/// Second-moment data of an elliptic-type matrix: s_ij = E|x_ij|^2 and
/// t_ij = E x_ij x_ji (so t is symmetric), plus the bound |rho| with
/// |t_ij| <= |rho| sqrt(s_ij s_ji).
struct CorrelationProfile {
  Mat s;
  CMat t;
  double rho_bound = 0.0;

  Eigen::Index n() const { return s.rows(); }
};

struct EllipticParams {
  int n = 1;
  cplx rho{0.0, 0.0};
  bool gaussian = true;
};

struct SampledMatrix {
  CMat x;
  std::uint64_t seed = 0;
  std::string profile_tag;
};

/// Throws InputError unless the profile is square, finite, has s >= 0 and an
/// exactly symmetric t.
inline void check_structure(const CorrelationProfile& p) {
  const auto n = p.s.rows();
  if (n < 1 || p.s.cols() != n || p.t.rows() != n || p.t.cols() != n)
    fail(ErrorKind::InvalidArgument, "profile: s and t must be n x n with n >= 1");
  if (!p.s.allFinite() || !p.t.allFinite()) fail(ErrorKind::InvalidArgument, "profile: non-finite entries");
  if ((p.s.array() < 0.0).any()) fail(ErrorKind::InvalidArgument, "profile: s has negative entries");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (p.t(i, j) != p.t(j, i)) fail(ErrorKind::InvalidArgument, "profile: t must be symmetric (t_ij = t_ji)");
  if (!(p.rho_bound >= 0.0)) fail(ErrorKind::InvalidArgument, "profile: rho_bound must be >= 0");
}

/// Elliptic ensemble profile: s_ij = 1/n, t_ij = rho/n.
inline CorrelationProfile constant_profiles(int n, cplx rho) {
  if (n < 1) fail(ErrorKind::InvalidArgument, "constant_profiles: n must be >= 1");
  if (!(std::abs(rho) < 1.0)) fail(ErrorKind::InvalidArgument, "constant_profiles: |rho| must be < 1");
  CorrelationProfile p;
  p.s = Mat::Constant(n, n, 1.0 / n);
  p.t = CMat::Constant(n, n, rho / static_cast<double>(n));
  p.rho_bound = std::abs(rho);
  return p;
}

/// True when s_ij = 1/n and t_ij = rho/n for all i, j; `rho` receives n * t_11.
inline bool is_constant_profile(const CorrelationProfile& p, cplx* rho = nullptr) {
  const auto n = p.n();
  const double s0 = p.s(0, 0);
  const cplx t0 = p.t(0, 0);
  if (std::abs(s0 * n - 1.0) > 1e-13) return false;
  if ((p.s.array() != s0).any() || (p.t.array() != t0).any()) return false;
  if (rho) *rho = t0 * static_cast<double>(n);
  return true;
}

inline bool has_nonneg_real_t(const CorrelationProfile& p) {
  return (p.t.imag().array() == 0.0).all() && (p.t.real().array() >= 0.0).all();
}

inline bool has_real_t(const CorrelationProfile& p) { return (p.t.imag().array() == 0.0).all(); }

struct ValidationReport {
  double rho_hat = 0.0;       // tightest rho with |t_ij| <= rho sqrt(s_ij s_ji), i != j
  int primitivity_power = 1;  // L
  double c0_s = 0.0;          // min_ij N (S^L)_ij
  double c0_ss = 0.0;         // min_ij N ((S^* S)^L)_ij
  bool nonneg_s = true;
  bool symmetric_t = true;
  bool nonneg_t = false;
  bool pass_non_hermitian = false;  // rho_hat < 1
  bool within_rho_bound = false;    // rho_hat <= rho_bound
  bool pass_primitivity = false;    // c0_s > 0 and c0_ss > 0
  bool holder_checked = false;      // piecewise Hoelder continuity of T is never verified

  bool ok() const { return nonneg_s && symmetric_t && pass_non_hermitian && within_rho_bound && pass_primitivity; }
};

inline ValidationReport validate_profile(const CorrelationProfile& p, int primitivity_power) {
  ValidationReport r;
  const auto n = p.n();
  r.primitivity_power = std::max(1, primitivity_power);
  r.nonneg_s = !(p.s.array() < 0.0).any();
  r.nonneg_t = has_nonneg_real_t(p);
  double rho_hat = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (p.t(i, j) != p.t(j, i)) r.symmetric_t = false;
      const double a = std::abs(p.t(i, j));
      const double b = std::sqrt(std::max(0.0, p.s(i, j)) * std::max(0.0, p.s(j, i)));
      if (a == 0.0) continue;
      rho_hat = std::max(rho_hat, b > 0.0 ? a / b : std::numeric_limits<double>::infinity());
    }
  }
  r.rho_hat = rho_hat;
  r.pass_non_hermitian = rho_hat < 1.0;
  r.within_rho_bound = rho_hat <= p.rho_bound * (1.0 + 1e-12);

  Mat sl = p.s;
  const Mat sts = p.s.transpose() * p.s;
  Mat ssl = sts;
  for (int k = 1; k < r.primitivity_power; ++k) {
    sl = sl * p.s;
    ssl = ssl * sts;
  }
  r.c0_s = static_cast<double>(n) * sl.minCoeff();
  r.c0_ss = static_cast<double>(n) * ssl.minCoeff();
  r.pass_primitivity = r.c0_s > 0.0 && r.c0_ss > 0.0;
  return r;
}

/// Exact size reduction of a profile with exchangeable index classes.
///
/// Indices i, j are equivalent when their rows of S and T and their columns of
/// S coincide. If all class sizes share a common divisor g, the profile with
/// class sizes divided by g and entries multiplied by g has the same
/// self-consistent resolvent per class, the same kernel and the same traces.
struct ReducedProfile {
  CorrelationProfile profile;
  std::vector<int> class_of;     // class index of each original index
  std::vector<int> class_sizes;  // sizes in the original profile
  int factor = 1;                // g
};

inline ReducedProfile reduce_profile(const CorrelationProfile& p) {
  const auto n = static_cast<int>(p.n());
  ReducedProfile out;
  out.class_of.assign(n, -1);
  std::vector<int> reps;
  for (int i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < reps.size(); ++c) {
      const int r = reps[c];
      if (p.s.row(i) == p.s.row(r) && p.t.row(i) == p.t.row(r) && p.s.col(i) == p.s.col(r)) {
        out.class_of[i] = static_cast<int>(c);
        break;
      }
    }
    if (out.class_of[i] < 0) {
      out.class_of[i] = static_cast<int>(reps.size());
      reps.push_back(i);
    }
  }
  out.class_sizes.assign(reps.size(), 0);
  for (int c : out.class_of) ++out.class_sizes[c];
  int g = 0;
  for (int sz : out.class_sizes) g = std::gcd(g, sz);
  out.factor = g;
  if (g <= 1) {
    out.profile = p;
    out.factor = 1;
    return out;
  }
  std::vector<int> members;
  for (std::size_t c = 0; c < reps.size(); ++c)
    for (int k = 0; k < out.class_sizes[c] / g; ++k) members.push_back(reps[c]);
  const auto m = static_cast<Eigen::Index>(members.size());
  out.profile.s.resize(m, m);
  out.profile.t.resize(m, m);
  // Equal rows and columns force s_ii = s_iq = s_qq within a class (likewise
  // for t), so the representative's diagonal entry stands in for in-class pairs.
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      out.profile.s(a, b) = p.s(members[a], members[b]) * g;
      out.profile.t(a, b) = p.t(members[a], members[b]) * static_cast<double>(g);
    }
  }
  out.profile.rho_bound = p.rho_bound;
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

/// SplitMix64 finalizer; used to derive independent sub-seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Sub-seed for replica `index` of a study seeded with `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(splitmix64(base) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

namespace detail {

// Factor f with f f^T = c for a positive semidefinite c (pivoted LDL^T).
// Returns false if c has a negative pivot beyond round-off.
template <int K>
bool psd_factor(const Eigen::Matrix<double, K, K>& c, Eigen::Matrix<double, K, K>& f) {
  Eigen::LDLT<Eigen::Matrix<double, K, K>> ldlt(c);
  const auto d = ldlt.vectorD();
  const double scale = std::max(1e-300, c.diagonal().cwiseAbs().maxCoeff());
  Eigen::Matrix<double, K, 1> sd;
  for (int k = 0; k < K; ++k) {
    if (d[k] < -1e-12 * scale) return false;
    sd[k] = std::sqrt(std::max(0.0, d[k]));
  }
  Eigen::Matrix<double, K, K> l = ldlt.matrixL();
  f = ldlt.transpositionsP().transpose() * (l * sd.asDiagonal());
  return true;
}

}  // namespace detail

/// Real covariance of (Re x_ij, Im x_ij, Re x_ji, Im x_ji) for a pair with
/// E|x_ij|^2 = s_ij, E|x_ji|^2 = s_ji, E x_ij x_ji = t and circular marginals
/// (E x_ij^2 = E x_ij conj(x_ji) = 0).
inline Eigen::Matrix4d pair_covariance(double s_ij, double s_ji, cplx t) {
  Eigen::Matrix4d c = Eigen::Matrix4d::Zero();
  c(0, 0) = c(1, 1) = 0.5 * s_ij;
  c(2, 2) = c(3, 3) = 0.5 * s_ji;
  c(0, 2) = c(2, 0) = 0.5 * t.real();   // E ac
  c(1, 3) = c(3, 1) = -0.5 * t.real();  // E bd
  c(0, 3) = c(3, 0) = 0.5 * t.imag();   // E ad
  c(1, 2) = c(2, 1) = 0.5 * t.imag();   // E bc
  return c;
}

/// Real covariance of (Re x_ii, Im x_ii) with E|x|^2 = s and E x^2 = t.
inline Eigen::Matrix2d diagonal_covariance(double s, cplx t) {
  Eigen::Matrix2d c;
  c << 0.5 * (s + t.real()), 0.5 * t.imag(), 0.5 * t.imag(), 0.5 * (s - t.real());
  return c;
}

/// Draws X with the pair structure of `p`: pairs (x_ij, x_ji), i < j, are
/// independent centered complex Gaussians with covariance (s_ij, s_ji, t_ij),
/// diagonal entries have E|x_ii|^2 = s_ii and E x_ii^2 = t_ii.
inline SampledMatrix sample_elliptic_type(const CorrelationProfile& p, std::uint64_t seed) {
  check_structure(p);
  const auto n = p.n();
  SampledMatrix out;
  out.seed = seed;
  out.profile_tag = "elliptic-type";
  out.x.resize(n, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Matrix4d f4;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (!detail::psd_factor<4>(pair_covariance(p.s(i, j), p.s(j, i), p.t(i, j)), f4))
        fail(ErrorKind::InvalidArgument, "sample_elliptic_type: pair covariance is not positive semidefinite at (" +
                                             std::to_string(i) + "," + std::to_string(j) + ")");
      Eigen::Vector4d g;
      for (int k = 0; k < 4; ++k) g[k] = normal(rng);
      const Eigen::Vector4d v = f4 * g;
      out.x(i, j) = cplx(v[0], v[1]);
      out.x(j, i) = cplx(v[2], v[3]);
    }
  }
  Eigen::Matrix2d f2;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!detail::psd_factor<2>(diagonal_covariance(p.s(i, i), p.t(i, i)), f2))
      fail(ErrorKind::InvalidArgument, "sample_elliptic_type: diagonal covariance is not positive semidefinite");
    Eigen::Vector2d g(normal(rng), normal(rng));
    const Eigen::Vector2d v = f2 * g;
    out.x(i, i) = cplx(v[0], v[1]);
  }
  return out;
}

/// Draws an elliptic matrix: E|x_ij|^2 = 1/n, E x_ij x_ji = rho/n.
///
/// Gaussian pairs are x_ij = z1/sqrt(n), x_ji = (rho conj(z1) + sqrt(1-|rho|^2) z2)/sqrt(n)
/// with z1, z2 standard circular complex Gaussians, so rho = 1 gives an exactly
/// Hermitian matrix. The non-Gaussian surrogate replaces z1, z2 by uniform
/// draws from {1, -1, i, -i}, which have the same first and second moments.
inline SampledMatrix sample_elliptic(const EllipticParams& params, std::uint64_t seed) {
  if (params.n < 1) fail(ErrorKind::InvalidArgument, "sample_elliptic: n must be >= 1");
  const double mod = std::abs(params.rho);
  if (!(mod <= 1.0)) fail(ErrorKind::InvalidArgument, "sample_elliptic: |rho| must be <= 1");
  const int n = params.n;
  const double sigma = 1.0 / std::sqrt(static_cast<double>(n));
  const double beta = std::sqrt(std::max(0.0, 1.0 - mod * mod));
  // Diagonal: x = sigma (alpha u + gamma conj(u)) has E|x|^2 = sigma^2 and
  // E x^2 = 2 alpha gamma sigma^2 = rho sigma^2 for circular u.
  const double alpha = std::sqrt(0.5 * (1.0 + beta));
  const cplx gamma = beta == 0.0 ? params.rho * alpha : params.rho / (2.0 * alpha);

  SampledMatrix out;
  out.seed = seed;
  out.profile_tag = params.gaussian ? "elliptic-gaussian" : "elliptic-bernoulli";
  out.x.resize(n, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> quarter(0, 3);
  const double h = std::sqrt(0.5);
  auto draw = [&]() -> cplx {
    if (params.gaussian) {
      const double a = normal(rng);
      const double b = normal(rng);
      return cplx(h * a, h * b);
    }
    static constexpr cplx units[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    return units[quarter(rng)];
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const cplx z1 = draw();
      const cplx z2 = draw();
      out.x(i, j) = sigma * z1;
      out.x(j, i) = sigma * (params.rho * std::conj(z1) + beta * z2);
    }
  }
  for (int i = 0; i < n; ++i) {
    const cplx u = draw();
    // |rho| = 1: factor alpha out so u + rho conj(u) cancels exactly (no FMA skew).
    out.x(i, i) = beta == 0.0 ? sigma * alpha * (u + params.rho * std::conj(u))
                              : sigma * (alpha * u + gamma * std::conj(u));
  }
  return out;
}

}  // namespace ellspec
