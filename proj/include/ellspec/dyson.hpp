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

// The vector Dyson equation 1 + (zeta + T b) b = 0 for the self-consistent
// pseudo-resolvent b(zeta), its stability gap, and the regularized 2x2 block
// equation of the Hermitization at z = i eta.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "ellspec/common.hpp"
#include "ellspec/ensemble.hpp"
#include "ellspec/perron.hpp"

namespace ellspec {

struct PseudoResolvent {
  cplx zeta;
  CVec b;
  double delta = 0.0;     // min(r(D_{|b|^2} S)^{-1} - 1, 1)
  double residual = 0.0;  // max-norm of 1 + (zeta + T b) b
  bool member = false;    // delta > delta_member
};

struct DysonOptions {
  double tol = 1e-12;
  double delta_member = 1e-6;
  int max_newton = 40;
};

/// Stability gap min(r(D_{|b|^2} S)^{-1} - 1, 1); zero when the radius is >= 1.
inline double spectral_gap(const CVec& b, const Mat& s) {
  const Mat m = b.cwiseAbs2().asDiagonal() * s;
  const double r = spectral_radius_nonneg(m, 1e-10);
  if (r >= 1.0) return 0.0;
  if (r <= 0.0) return 1.0;
  return std::min(1.0 / r - 1.0, 1.0);
}

inline double dyson_residual(cplx zeta, const CorrelationProfile& p, const CVec& b) {
  const CVec f = CVec::Ones(b.size()) + ((p.t * b).array() + zeta).matrix().cwiseProduct(b);
  return f.cwiseAbs().maxCoeff();
}

namespace detail {

// Restarted GMRES for the preconditioned Newton system
//   (I + D_w T) x = rhs,   w = b / (zeta + T b) = -b^2,
// whose iteration matrix has spectral radius <= |rho| < 1 on the resolvent set.
inline std::optional<CVec> gmres_newton(const CMat& t, const CVec& w, const CVec& rhs, double rel_tol,
                                        int restart = 40, int max_restarts = 8) {
  const Eigen::Index n = rhs.size();
  auto apply = [&](const CVec& v) -> CVec { return v + w.cwiseProduct(t * v); };
  const double bnorm = rhs.norm();
  CVec x = CVec::Zero(n);
  if (bnorm == 0.0) return x;
  const int m = static_cast<int>(std::min<Eigen::Index>(restart, n));
  for (int cycle = 0; cycle < max_restarts; ++cycle) {
    CVec r = rhs - apply(x);
    double beta = r.norm();
    if (beta <= rel_tol * bnorm) return x;
    CMat v(n, m + 1);
    CMat h = CMat::Zero(m + 1, m);
    std::vector<cplx> cs(m), sn(m);
    CVec g = CVec::Zero(m + 1);
    g[0] = beta;
    v.col(0) = r / beta;
    int k = 0;
    for (; k < m; ++k) {
      CVec u = apply(v.col(k));
      for (int j = 0; j <= k; ++j) {
        h(j, k) = v.col(j).dot(u);
        u -= h(j, k) * v.col(j);
      }
      h(k + 1, k) = u.norm();
      if (std::abs(h(k + 1, k)) > 0.0) v.col(k + 1) = u / h(k + 1, k);
      for (int j = 0; j < k; ++j) {
        const cplx tmp = std::conj(cs[j]) * h(j, k) + std::conj(sn[j]) * h(j + 1, k);
        h(j + 1, k) = -sn[j] * h(j, k) + cs[j] * h(j + 1, k);
        h(j, k) = tmp;
      }
      const double denom = std::hypot(std::abs(h(k, k)), std::abs(h(k + 1, k)));
      if (denom == 0.0) return std::nullopt;
      cs[k] = h(k, k) / denom;
      sn[k] = h(k + 1, k) / denom;
      h(k, k) = denom;
      h(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = std::conj(cs[k]) * g[k];
      if (std::abs(g[k + 1]) <= rel_tol * bnorm) {
        ++k;
        break;
      }
    }
    CVec y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    x += v.leftCols(k) * y;
  }
  if ((rhs - apply(x)).norm() <= 1e3 * rel_tol * bnorm) return x;
  return std::nullopt;
}

// One Newton solve of 1 + (zeta + T b) b = 0 from `b` (modified in place).
inline bool newton_b(cplx zeta, const CorrelationProfile& p, CVec& b, const DysonOptions& opt) {
  const Eigen::Index n = b.size();
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_newton; ++it) {
    const CVec tb = p.t * b;
    const CVec z = (tb.array() + zeta).matrix();
    const CVec f = CVec::Ones(n) + z.cwiseProduct(b);
    const double res = f.cwiseAbs().maxCoeff();
    if (!std::isfinite(res)) return false;
    if (it > 3 && res > 0.9 * prev && res > opt.tol) return false;
    prev = res;
    CVec step;
    if (n <= 48) {
      CMat jac = b.asDiagonal() * p.t;
      jac.diagonal() += z;
      Eigen::PartialPivLU<CMat> lu(jac);
      step = lu.solve(-f);
    } else {
      const CVec w = b.cwiseQuotient(z);
      auto sol = gmres_newton(p.t, w, (-f).cwiseQuotient(z), 1e-15);
      if (!sol) {
        CMat jac = b.asDiagonal() * p.t;
        jac.diagonal() += z;
        step = jac.partialPivLu().solve(-f);
      } else {
        step = std::move(*sol);
      }
    }
    if (!step.allFinite()) return false;
    b += step;
    const double step_norm = step.cwiseAbs().maxCoeff();
    const double scale = std::max(1e-300, b.cwiseAbs().maxCoeff());
    if (res <= opt.tol && step_norm <= opt.tol * std::max(1.0, scale)) {
      return dyson_residual(zeta, p, b) <= opt.tol;
    }
  }
  return dyson_residual(zeta, p, b) <= opt.tol;
}

inline double continuation_start_radius(const CorrelationProfile& p) {
  const double rs = spectral_radius_nonneg(p.s, 1e-8);
  return std::max(10.0, 4.0 * std::sqrt(rs) * (1.0 + p.rho_bound));
}

// r(D_{|b|^2} |T|) bounds r(D_{b^2} T); reaching 1 makes the Dyson Jacobian singular.
inline double jacobian_radius_bound(const CVec& b, const CMat& t) {
  const Mat m = b.cwiseAbs2().asDiagonal() * t.cwiseAbs();
  return spectral_radius_nonneg(m, 1e-8);
}

}  // namespace detail

/// Solves the Dyson equation at `zeta` on the branch connected to infinity.
///
/// Starts at R zeta/|zeta| with b = -1/zeta_0 and follows the ray inwards with
/// geometric steps in |zeta|, Newton-correcting at every step. Throws
/// NonMember if the gap closes along the ray, SingularJacobian if Newton fails
/// because r(D_b^2 T) reached 1.
inline PseudoResolvent solve_b(cplx zeta, const CorrelationProfile& p, const DysonOptions& opt = {}) {
  if (zeta == cplx(0.0)) fail(ErrorKind::InvalidArgument, "solve_b: zeta = 0 is never in the resolvent set");
  if (!(opt.tol > 0.0)) fail(ErrorKind::InvalidArgument, "solve_b: tol must be positive");
  const Eigen::Index n = p.n();
  const double target = std::abs(zeta);
  const cplx dir = zeta / target;
  const double start = std::max(target, detail::continuation_start_radius(p));

  double radius = start;
  CVec b = CVec::Constant(n, -1.0 / (dir * radius));
  if (!detail::newton_b(dir * radius, p, b, opt))
    fail(ErrorKind::NoConvergence, "solve_b: Newton failed at the continuation start");

  // Previous point for the secant predictor (in the variable 1/zeta).
  std::optional<std::pair<double, CVec>> prev;
  double h = 0.35;  // log-step in |zeta|
  auto check_gap = [&](double r, const CVec& bb) {
    const double d = spectral_gap(bb, p.s);
    if (!(d > opt.delta_member)) {
      std::ostringstream os;
      os << "solve_b: stability gap closed on the ray to zeta = " << zeta << "; last valid zeta = " << dir * radius;
      (void)r;
      fail(ErrorKind::NonMember, os.str());
    }
    return d;
  };
  check_gap(radius, b);
  while (radius > target) {
    const double next = std::max(target, radius * std::exp(-h));
    CVec guess = b;
    if (prev) {
      const double w0 = 1.0 / prev->first, w1 = 1.0 / radius, w2 = 1.0 / next;
      guess = b + (b - prev->second) * ((w2 - w1) / (w1 - w0));
    } else {
      guess = b * (radius / next);
    }
    CVec trial = guess;
    if (detail::newton_b(dir * next, p, trial, opt) && check_gap(next, trial) > 0.0) {
      prev = std::make_pair(radius, b);
      b = std::move(trial);
      radius = next;
      h = std::min(0.7, h * 1.5);
    } else {
      h *= 0.5;
      if (h < 1e-7) {
        if (detail::jacobian_radius_bound(b, p.t) >= 1.0 - 1e-9)
          fail(ErrorKind::SingularJacobian, "solve_b: r(D_b^2 T) reached 1");
        std::ostringstream os;
        os << "solve_b: continuation stalled towards zeta = " << zeta << "; last valid zeta = " << dir * radius;
        fail(ErrorKind::NonMember, os.str());
      }
    }
  }
  PseudoResolvent out;
  out.zeta = zeta;
  out.b = std::move(b);
  out.residual = dyson_residual(zeta, p, out.b);
  out.delta = spectral_gap(out.b, p.s);
  out.member = out.delta > opt.delta_member;
  return out;
}

/// Newton-corrects a nearby solution `guess` at `zeta` without any membership
/// check. Used to follow b analytically across the boundary point zeta*.
inline CVec track_b(cplx zeta, const CorrelationProfile& p, CVec guess, const DysonOptions& opt = {}) {
  if (!detail::newton_b(zeta, p, guess, opt)) fail(ErrorKind::NoConvergence, "track_b: Newton failed");
  return guess;
}

/// Closed-form scalar solution for the elliptic ensemble,
/// b = (-zeta + sqrt(zeta^2 - 4 rho)) / (2 rho), with the square root cut along
/// [-2 sqrt(rho), 2 sqrt(rho)] and sqrt(zeta^2 - 4 rho) ~ zeta at infinity.
inline cplx solve_b_elliptic(cplx zeta, cplx rho) {
  if (zeta == cplx(0.0)) fail(ErrorKind::BranchAmbiguity, "solve_b_elliptic: zeta = 0 lies on the cut");
  const cplx u = 1.0 - 4.0 * rho / (zeta * zeta);
  if (std::abs(u.imag()) <= 1e-15 * std::abs(u) && u.real() <= 0.0)
    fail(ErrorKind::BranchAmbiguity, "solve_b_elliptic: zeta lies on the branch cut");
  const cplx root = zeta * std::sqrt(u);
  // (-zeta + root)/(2 rho) rewritten without cancellation; also valid at rho = 0.
  return -2.0 / (zeta + root);
}

/// Derivative db/dzeta = D_b (1 - D_b T D_b)^{-1} b.
inline CVec db_dzeta(const PseudoResolvent& pr, const CorrelationProfile& p) {
  if (!pr.member) fail(ErrorKind::NonMember, "db_dzeta: zeta is not in the resolvent set");
  const Eigen::Index n = pr.b.size();
  CMat m = -(pr.b.asDiagonal() * p.t * pr.b.asDiagonal());
  m.diagonal().array() += 1.0;
  Eigen::FullPivLU<CMat> lu(m);
  if (!lu.isInvertible()) fail(ErrorKind::SingularJacobian, "db_dzeta: 1 - D_b T D_b is singular");
  CVec y = lu.solve(pr.b);
  (void)n;
  return pr.b.cwiseProduct(y);
}

// ---------------------------------------------------------------------------
// Regularized 2x2 block equation of the Hermitization.

struct MdeSolution2x2 {
  cplx zeta;
  double eta = 0.0;
  Vec a;   // > 0
  Vec d;   // > 0
  CVec b;
  double residual = 0.0;
  int iterations = 0;
};

namespace detail {

// Residual of the block equations in the convention where the (1,1) block
// couples to S d and the (2,2) block to S^T a:
//   1 + (T b + zeta) b = a (S d + eta),
//   a = (S^T a + eta)|b|^2 + (S d + eta) a^2,
//   d = (S d + eta)|b|^2 + (S^T a + eta) d^2,
//   1/a = S d + eta + |T b + zeta|^2 / (S^T a + eta),
//   b = -a conj(T b + zeta) / (S^T a + eta).
inline double mde_residual(cplx zeta, double eta, const CorrelationProfile& p, const Vec& a, const Vec& d,
                           const CVec& b) {
  const Vec alpha = (p.s * d).array() + eta;
  const Vec delta = (p.s.transpose() * a).array() + eta;
  const CVec beta = (p.t * b).array() + zeta;
  const Vec b2 = b.cwiseAbs2();
  double r = 0.0;
  r = std::max(r, (CVec::Ones(b.size()) + beta.cwiseProduct(b) - a.cwiseProduct(alpha).cast<cplx>()).cwiseAbs().maxCoeff());
  r = std::max(r, (a - delta.cwiseProduct(b2) - alpha.cwiseProduct(a.cwiseAbs2())).cwiseAbs().maxCoeff());
  r = std::max(r, (d - alpha.cwiseProduct(b2) - delta.cwiseProduct(d.cwiseAbs2())).cwiseAbs().maxCoeff());
  const Vec inv_a = alpha.array() + beta.cwiseAbs2().array() / delta.array();
  r = std::max(r, (a.cwiseProduct(inv_a) - Vec::Ones(a.size())).cwiseAbs().maxCoeff());
  const CVec bb = -(a.cwiseQuotient(delta)).cast<cplx>().cwiseProduct(beta.conjugate());
  r = std::max(r, (b - bb).cwiseAbs().maxCoeff());
  return r;
}

}  // namespace detail

/// Damped fixed-point iteration of the 2x2 block map at z = i eta, from
/// a = d = 1, b = -conj(zeta)/(1 + |zeta|^2).
inline MdeSolution2x2 solve_mde_2x2(cplx zeta, double eta, const CorrelationProfile& p, double tol = 1e-12,
                                    int max_iter = 2000000, double damping = 0.5) {
  if (!(eta > 0.0)) fail(ErrorKind::InvalidArgument, "solve_mde_2x2: eta must be positive");
  const Eigen::Index n = p.n();
  MdeSolution2x2 out;
  out.zeta = zeta;
  out.eta = eta;
  Vec a = Vec::Ones(n);
  Vec d = Vec::Ones(n);
  CVec b = CVec::Constant(n, -std::conj(zeta) / (1.0 + std::norm(zeta)));
  const Mat st = p.s.transpose();
  for (int it = 1; it <= max_iter; ++it) {
    const Vec alpha = (p.s * d).array() + eta;
    const Vec delta = (st * a).array() + eta;
    const CVec beta = (p.t * b).array() + zeta;
    const Vec den = alpha.cwiseProduct(delta) + beta.cwiseAbs2();
    const Vec a_new = delta.cwiseQuotient(den);
    const Vec d_new = alpha.cwiseQuotient(den);
    const CVec b_new = -beta.conjugate().cwiseQuotient(den.cast<cplx>());
    const double change = std::max({(a_new - a).cwiseAbs().maxCoeff(), (d_new - d).cwiseAbs().maxCoeff(),
                                     (b_new - b).cwiseAbs().maxCoeff()});
    a = (1.0 - damping) * a + damping * a_new;
    d = (1.0 - damping) * d + damping * d_new;
    b = (1.0 - damping) * b + damping * b_new;
    out.iterations = it;
    if (change <= 0.1 * tol || (it % 64 == 0 && change <= tol)) {
      const double res = detail::mde_residual(zeta, eta, p, a, d, b);
      if (res <= tol) {
        out.a = a;
        out.d = d;
        out.b = b;
        out.residual = res;
        return out;
      }
    }
  }
  out.a = a;
  out.d = d;
  out.b = b;
  out.residual = detail::mde_residual(zeta, eta, p, a, d, b);
  std::ostringstream os;
  os << "solve_mde_2x2: no convergence after " << max_iter << " iterations, residual " << out.residual;
  fail(ErrorKind::NoConvergence, os.str());
}

/// Richardson extrapolation of the b-block to eta = 0 from eta0, eta0/2, eta0/4.
inline CVec mde_b_at_zero(cplx zeta, const CorrelationProfile& p, double eta0, double tol = 1e-13) {
  const CVec b1 = solve_mde_2x2(zeta, eta0, p, tol).b;
  const CVec b2 = solve_mde_2x2(zeta, 0.5 * eta0, p, tol).b;
  const CVec b4 = solve_mde_2x2(zeta, 0.25 * eta0, p, tol).b;
  return (8.0 * b4 - 6.0 * b2 + b1) / 3.0;
}

}  // namespace ellspec
