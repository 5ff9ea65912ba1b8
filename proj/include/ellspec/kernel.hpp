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

// The two-resolvent kernel K(zeta1, zeta2), the deterministic limit of
// tr_N (X - zeta1)^{-1} (X^* - conj zeta2)^{-1}, and the data of its
// singularity at zeta*: Perron pair, eigenvalue derivatives and A(S, T).

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/SVD>

#include "ellspec/common.hpp"
#include "ellspec/dyson.hpp"
#include "ellspec/ensemble.hpp"
#include "ellspec/geometry.hpp"
#include "ellspec/perron.hpp"

namespace ellspec {

struct KernelEval {
  cplx zeta1, zeta2;
  cplx value;
  double min_sing = 0.0;  // smallest singular value of D^{-1}_{b1 conj(b2)} - S
};

namespace detail {

// K = <(D^{-1}_{b1 conj b2} - S)^{-1} 1>, i.e. (1/N) sum_ij of the inverse.
// Throws NearSingular when the LU reciprocal condition estimate collapses.
inline cplx kernel_from_b(const CVec& b1, const CVec& b2, const Mat& s) {
  const Eigen::Index n = b1.size();
  CMat m = -s.cast<cplx>();
  const CVec c = b1.cwiseProduct(b2.conjugate()).cwiseInverse();
  m.diagonal() += c;
  Eigen::PartialPivLU<CMat> lu(m);
  if (!(lu.rcond() > 1e-14)) fail(ErrorKind::NearSingular, "kernel: D^{-1}_{b1 conj b2} - S is numerically singular");
  const CVec y = lu.solve(CVec::Ones(n));
  return avg(y);
}

}  // namespace detail

/// K(zeta1, zeta2) for a general profile with one dense solve.
inline KernelEval kernel_general(cplx zeta1, cplx zeta2, const CorrelationProfile& p, const DysonOptions& opt = {}) {
  const auto r1 = solve_b(zeta1, p, opt);
  const auto r2 = solve_b(zeta2, p, opt);
  if (!r1.member || !r2.member) fail(ErrorKind::NonMember, "kernel_general: both points must lie in the resolvent set");
  const Eigen::Index n = p.n();
  CMat m = -p.s.cast<cplx>();
  const CVec dinv = r1.b.cwiseProduct(r2.b.conjugate()).cwiseInverse();
  m.diagonal() += dinv;
  KernelEval out;
  out.zeta1 = zeta1;
  out.zeta2 = zeta2;
  Eigen::BDCSVD<CMat> svd(m);
  out.min_sing = svd.singularValues()[n - 1];
  if (out.min_sing < 1e-10 * dinv.cwiseAbs().maxCoeff()) {
    std::ostringstream os;
    os << "kernel_general: smallest singular value " << out.min_sing << " at (" << zeta1 << ", " << zeta2 << ")";
    fail(ErrorKind::NearSingular, os.str());
  }
  out.value = avg(m.partialPivLu().solve(CVec::Ones(n)));
  return out;
}

/// Closed form b1 conj(b2) / (1 - b1 conj(b2)) for the elliptic ensemble.
inline cplx kernel_elliptic(cplx zeta1, cplx zeta2, cplx rho) {
  const cplx q = solve_b_elliptic(zeta1, rho) * std::conj(solve_b_elliptic(zeta2, rho));
  if (std::abs(1.0 - q) < 1e-12) fail(ErrorKind::PoleContact, "kernel_elliptic: b1 conj(b2) = 1");
  return q / (1.0 - q);
}

/// Independent entries (T = 0): <(zeta1 conj(zeta2) - S)^{-1} 1>.
inline cplx kernel_independent(cplx zeta1, cplx zeta2, const Mat& s) {
  const cplx w = zeta1 * std::conj(zeta2);
  if (!(std::abs(w) > spectral_radius_nonneg(s, 1e-10)))
    fail(ErrorKind::InvalidArgument, "kernel_independent: need |zeta1 conj(zeta2)| > r(S)");
  const Eigen::Index n = s.rows();
  CMat m = -s.cast<cplx>();
  m.diagonal().array() += w;
  Eigen::PartialPivLU<CMat> lu(m);
  if (!(lu.rcond() > 1e-14)) fail(ErrorKind::NearSingular, "kernel_independent: zeta1 conj(zeta2) - S is singular");
  return avg(lu.solve(CVec::Ones(n)));
}

// ---------------------------------------------------------------------------
// Singularity data at zeta*.

struct SingularityData {
  double zeta_star = 0.0;
  Vec b;         // b(zeta*) (real, negative)
  Vec v_l, v_r;  // Perron pair of L = D_b^{-2} - S at its zero eigenvalue, <v_l, v_r> = 1
  double d2_lambda = 0.0;  // conj-partial_2 lambda at zeta*
  double dz2 = 0.0;        // d conj(z2) / d zeta1 along {lambda = 0}; equals -1
  double d2z2 = 0.0;       // second derivative of the same path
  double f_norm = 0.0;     // ||D_|b| T D_|b|||
  double a_coeff = 0.0;    // A(S, T), Perron/F expression
  double a_coeff_derivatives = 0.0;  // A(S, T) from <v_l><v_r> / (d2_lambda sqrt(d2z2))
  double a_discrepancy = 0.0;        // relative difference of the two expressions
};

namespace detail {

// Solves (L - lambda) r = rhs with <v_l, r> = 0 through the bordered system.
inline Vec bordered_solve(const Mat& l, double lambda, const Vec& v_r, const Vec& v_l, const Vec& rhs) {
  const Eigen::Index n = l.rows();
  Mat a = Mat::Zero(n + 1, n + 1);
  a.topLeftCorner(n, n) = l;
  a.topLeftCorner(n, n).diagonal().array() -= lambda;
  a.block(0, n, n, 1) = v_r;
  a.block(n, 0, 1, n) = v_l.transpose();
  Vec r(n + 1);
  r.head(n) = rhs;
  r[n] = 0.0;
  return a.fullPivLu().solve(r).head(n);
}

// b(zeta*) from the outside: quadratic extrapolation of b(zeta* + delta) over
// delta in {1e-3, 1e-4, 1e-5}, then Newton-polished at zeta*.
inline Vec b_at_zeta_star(const CorrelationProfile& p, double zs, const CVec& seed) {
  DysonOptions opt;
  opt.tol = 1e-14;
  const double d[3] = {1e-3, 1e-4, 1e-5};
  CVec v[3];
  for (int k = 0; k < 3; ++k) v[k] = track_b(zs + d[k], p, seed, opt);
  // Lagrange weights at delta = 0.
  CVec extrap = CVec::Zero(seed.size());
  for (int k = 0; k < 3; ++k) {
    double w = 1.0;
    for (int m = 0; m < 3; ++m)
      if (m != k) w *= (0.0 - d[m]) / (d[k] - d[m]);
    extrap += w * v[k];
  }
  try {
    return track_b(zs, p, extrap, opt).real();
  } catch (const NumericalError&) {
    return extrap.real();
  }
}

}  // namespace detail

/// Singularity data and the amplitude A(S, T) of the critical decay law.
inline SingularityData coefficient_A(const CorrelationProfile& p_in, double tol = 1e-12) {
  if (!has_nonneg_real_t(p_in)) fail(ErrorKind::NotApplicable, "coefficient_A: T must be entry-wise nonnegative");
  // Lumping exchangeable indices preserves every normalized average below.
  const ReducedProfile reduced = reduce_profile(p_in);
  const CorrelationProfile& p = reduced.profile;
  const Eigen::Index n = p.n();
  const Mat t = p.t.real();
  SingularityData out;
  const auto zs = find_zeta_star_full(p, tol);
  out.zeta_star = zs.zeta_star;
  out.b = detail::b_at_zeta_star(p, zs.zeta_star, zs.b);
  const Vec& b = out.b;
  const Vec b2 = b.cwiseAbs2();

  // Perron pair of D_{b^2} S; v_r spans ker L, and v_l = b^2 o (left Perron vector).
  const Mat m = b2.asDiagonal() * p.s;
  const PerronPair pp = perron_pair(m, 0, 1e-14);
  out.v_r = pp.right;
  out.v_l = b2.cwiseProduct(pp.left);
  out.v_l /= inner(out.v_l, out.v_r);
  const Vec& vl = out.v_l;
  const Vec& vr = out.v_r;

  // Derivatives of b along the real axis at zeta*: (D_b^{-2} - T) b' = 1,
  // (D_b^{-2} - T) b'' = 2 b'^2 / b^3.
  Mat g = -t;
  g.diagonal() += b2.cwiseInverse();
  Eigen::FullPivLU<Mat> glu(g);
  const Vec b1d = glu.solve(Vec::Ones(n));
  const Vec b2d = glu.solve(2.0 * b1d.cwiseAbs2().cwiseQuotient(b.array().cube().matrix()));

  // L(zeta1, w2) = D^{-1}_{b(zeta1) b(w2)} - S and its derivatives at (zeta*, zeta*).
  Mat l = -p.s;
  l.diagonal() += b2.cwiseInverse();
  const Vec b4 = b2.cwiseAbs2();
  const Vec l1 = -b1d.cwiseQuotient(b.array().cube().matrix());       // d1 L = d2 L (diagonal)
  const Vec l12 = b1d.cwiseAbs2().cwiseQuotient(b4);                    // d1 d2 L
  const Vec l11 = (2.0 * b1d.cwiseAbs2() - b.cwiseProduct(b2d)).cwiseQuotient(b4);  // d1^2 L
  const double vv = vl.dot(vr);
  const double lam1 = vl.dot(l1.cwiseProduct(vr)) / vv;  // d1 lambda = d2 lambda
  const Vec rhs = -(l1.cwiseProduct(vr) - lam1 * vr);
  const Vec r1 = detail::bordered_solve(l, 0.0, vr, vl, rhs);  // d1 v_r = d2 v_r
  const double lam12 = (vl.dot(l12.cwiseProduct(vr)) + 2.0 * vl.dot(l1.cwiseProduct(r1))) / vv;
  const double lam11 = (vl.dot(l11.cwiseProduct(vr)) + 2.0 * vl.dot(l1.cwiseProduct(r1))) / vv;
  out.d2_lambda = lam1;
  out.dz2 = -lam1 / lam1;
  out.d2z2 = 2.0 * (lam12 - lam11) / lam1;

  // F = D_|b| T D_|b|, x = (1 - F)^{-1} |b|.
  const Vec ab = b.cwiseAbs();
  const Mat f = ab.asDiagonal() * t * ab.asDiagonal();
  out.f_norm = Eigen::JacobiSVD<Mat>(f).singularValues()[0];
  Mat one_minus_f = -f;
  one_minus_f.diagonal().array() += 1.0;
  Eigen::FullPivLU<Mat> flu(one_minus_f);
  const Vec x = flu.solve(ab);
  const Vec y = flu.solve(Vec(x.cwiseAbs2()));
  const Vec q = y + f * y;  // (1 + F)(1 - F)^{-1} x^2
  const Vec w = vl.cwiseProduct(vr).cwiseQuotient(b2);
  const double mean_l = avg(vl), mean_r = avg(vr), lr = inner(vl, vr);
  const double inner1 = inner(w, q);
  const double inner2 = avg(Vec(w.cwiseProduct(x)));
  out.a_coeff = mean_l * mean_r / (lr * std::sqrt(2.0 * inner1 * inner2));
  out.a_coeff_derivatives = mean_l * mean_r / (out.d2_lambda * lr * std::sqrt(out.d2z2));
  out.a_discrepancy = std::abs(out.a_coeff - out.a_coeff_derivatives) / out.a_coeff;
  if (reduced.factor > 1) {
    // Back to the original indexing: each class occupies a contiguous block of the reduced profile.
    std::vector<int> offset(reduced.class_sizes.size(), 0);
    for (std::size_t c = 1; c < offset.size(); ++c) offset[c] = offset[c - 1] + reduced.class_sizes[c - 1] / reduced.factor;
    const auto full = static_cast<Eigen::Index>(reduced.class_of.size());
    Vec bf(full), lf(full), rf(full);
    for (Eigen::Index i = 0; i < full; ++i) {
      const int k = offset[reduced.class_of[i]];
      bf[i] = out.b[k];
      lf[i] = out.v_l[k];
      rf[i] = out.v_r[k];
    }
    out.b = bf;
    out.v_l = lf;
    out.v_r = rf;
  }
  return out;
}

/// Eigenvalue of L(zeta1, w2) = D^{-1}_{b(zeta1) b(w2)} - S nearest zero for real
/// arguments near zeta*, by inverse iteration. `b_ref` is b(zeta*) and seeds the
/// analytic continuation of b; `v_seed` seeds the iteration (v_r at zeta*).
inline double lambda_near_zero(const CorrelationProfile& p, double zeta1, double w2, const Vec& b_ref,
                               const Vec& v_seed) {
  DysonOptions opt;
  opt.tol = 1e-14;
  const Vec b1 = track_b(zeta1, p, b_ref.cast<cplx>(), opt).real();
  const Vec b2 = track_b(w2, p, b_ref.cast<cplx>(), opt).real();
  Mat l = -p.s;
  l.diagonal() += b1.cwiseProduct(b2).cwiseInverse();
  Eigen::FullPivLU<Mat> lu(l);
  Vec v = v_seed.normalized();
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vec y = lu.solve(v);
    const double mu = v.dot(y) / v.dot(v);  // ~ 1/lambda
    const double next = 1.0 / mu;
    v = y.normalized();
    if (it > 2 && std::abs(next - lambda) <= 1e-16 * std::max(1.0, std::abs(next))) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  // Polish with the exact Rayleigh-type quotient for the converged eigenvector.
  return v.dot(l * v) / v.dot(v);
}

}  // namespace ellspec
