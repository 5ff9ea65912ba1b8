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

// Trapezoidal contour quadrature of resolvent integrals: deterministic limits
// of tr_N f(X), tr_N f(X) g(X^*) and of the decay E||u_t||^2.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ellspec/common.hpp"
#include "ellspec/dyson.hpp"
#include "ellspec/ensemble.hpp"
#include "ellspec/geometry.hpp"
#include "ellspec/kernel.hpp"
#include "ellspec/parallel.hpp"

namespace ellspec {

enum class Orientation { CCW, CW };

struct Contour {
  std::vector<cplx> nodes;
  std::vector<cplx> weights;  // d zeta quadrature weights
  Orientation orientation = Orientation::CCW;
  std::string kind;
  double epsilon = 0.0;

  std::size_t size() const { return nodes.size(); }
};

/// zeta_k = radius e^{+-2 pi i k/n}, weights +-(2 pi i/n) zeta_k.
inline Contour circle_contour(double radius, int n, Orientation o = Orientation::CCW) {
  if (!(radius > 0.0) || n < 8) fail(ErrorKind::InvalidArgument, "circle_contour: need radius > 0 and n >= 8");
  Contour c;
  c.kind = "circle";
  c.orientation = o;
  const double sign = o == Orientation::CCW ? 1.0 : -1.0;
  for (int k = 0; k < n; ++k) {
    const cplx z = std::polar(radius, sign * 2.0 * kPi * k / n);
    c.nodes.push_back(z);
    c.weights.push_back(sign * kI * (2.0 * kPi / n) * z);
  }
  return c;
}

/// (1 + eps) times the boundary of E_rho, trapezoidal in the parameter phi.
inline Contour dilated_ellipse_contour(cplx rho, double epsilon, int n, Orientation o = Orientation::CCW) {
  if (!(std::abs(rho) < 1.0) || !(epsilon > 0.0) || n < 8)
    fail(ErrorKind::InvalidArgument, "dilated_ellipse_contour: need |rho| < 1, epsilon > 0, n >= 8");
  Contour c;
  c.kind = "dilated-ellipse";
  c.orientation = o;
  c.epsilon = epsilon;
  const double r = std::abs(rho);
  const cplx rot = (1.0 + epsilon) * std::polar(1.0, 0.5 * std::arg(rho));
  // Increasing phi runs clockwise because |rho| < 1.
  const double dphi = (o == Orientation::CCW ? -1.0 : 1.0) * 2.0 * kPi / n;
  for (int k = 0; k < n; ++k) {
    const double phi = k * dphi;
    c.nodes.push_back(rot * (r * std::polar(1.0, phi) + std::polar(1.0, -phi)));
    c.weights.push_back(rot * kI * (r * std::polar(1.0, phi) - std::polar(1.0, -phi)) * dphi);
  }
  return c;
}

namespace detail {

inline std::vector<CVec> node_b_values(const Contour& c, const CorrelationProfile& p, int threads) {
  std::vector<CVec> out(c.size());
  parallel_for(c.size(), threads, [&](std::size_t k) {
    const auto pr = solve_b(c.nodes[k], p);
    if (!pr.member) fail(ErrorKind::NonMember, "contour node outside the resolvent set");
    out[k] = pr.b;
  });
  return out;
}

// K(zeta_k, zeta_l) for all node pairs; Hermitian, so only k <= l is solved.
inline CMat kernel_matrix(const std::vector<CVec>& bs, const CorrelationProfile& p, int threads) {
  const Eigen::Index n = static_cast<Eigen::Index>(bs.size());
  CMat k(n, n);
  cplx rho;
  const bool constant = is_constant_profile(p, &rho);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t row) {
    const auto a = static_cast<Eigen::Index>(row);
    for (Eigen::Index b = a; b < n; ++b) {
      cplx v;
      if (constant) {
        const cplx q = bs[a][0] * std::conj(bs[b][0]);
        v = q / (1.0 - q);
      } else {
        v = kernel_from_b(bs[a], bs[b], p.s);
      }
      k(a, b) = v;
      k(b, a) = std::conj(v);
    }
  });
  return k;
}

}  // namespace detail

/// Deterministic limit of tr_N f(X): -(1/2 pi i) sum_k f(zeta_k) <b(zeta_k)> w_k.
inline cplx trace_f(const Contour& c, const std::function<cplx(cplx)>& f, const CorrelationProfile& p) {
  const CorrelationProfile red = reduce_profile(p).profile;
  cplx acc = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const auto pr = solve_b(c.nodes[k], red);
    if (!pr.member) fail(ErrorKind::NonMember, "trace_f: contour node outside the resolvent set");
    acc += f(c.nodes[k]) * avg(pr.b) * c.weights[k];
  }
  return -acc / (2.0 * kPi * kI);
}

/// (1/4 pi^2) sum_{k,l} f(zeta_k) g(conj zeta_l) K(zeta_k, zeta_l) w_k conj(w_l),
/// given the kernel matrix on the nodes.
inline cplx trace_fg_from_kernel(const Contour& c, const CMat& kmat, const std::function<cplx(cplx)>& f,
                                 const std::function<cplx(cplx)>& g) {
  const Eigen::Index n = static_cast<Eigen::Index>(c.size());
  CVec u(n), v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    u[k] = f(c.nodes[k]) * c.weights[k];
    v[k] = g(std::conj(c.nodes[k])) * std::conj(c.weights[k]);
  }
  return (u.transpose() * kmat * v)(0, 0) / (4.0 * kPi * kPi);
}

/// Deterministic limit of tr_N f(X) g(X^*) by the double contour integral.
/// Appends a message to `warnings` when K jumps by more than 10^3 between
/// adjacent nodes (under-resolved singularity).
inline cplx trace_fg(const Contour& c, const std::function<cplx(cplx)>& f, const std::function<cplx(cplx)>& g,
                     const CorrelationProfile& p, std::vector<std::string>* warnings = nullptr, int threads = 1) {
  const CorrelationProfile red = reduce_profile(p).profile;
  const CMat kmat = detail::kernel_matrix(detail::node_b_values(c, red, threads), red, threads);
  if (warnings) {
    const Eigen::Index n = kmat.rows();
    for (Eigen::Index k = 0; k < n; ++k) {
      const double a = std::abs(kmat(k, k)), b = std::abs(kmat((k + 1) % n, (k + 1) % n));
      if (std::max(a, b) > 1e3 * std::min(a, b)) {
        warnings->push_back("trace_fg: kernel varies by more than 1e3 between adjacent nodes; increase n");
        break;
      }
    }
  }
  return trace_fg_from_kernel(c, kmat, f, g);
}

// ---------------------------------------------------------------------------
// Decay curve.

struct DecayConfig {
  double epsilon = 0.05;
  int n_min = 0;      // 0: max(128, 16 ceil(sqrt(g t_max)))
  int n_cap = 2048;
  double rel_tol = 1e-6;
  int threads = 1;
};

struct DecayCurve {
  std::vector<double> times;
  std::vector<double> deterministic;
  std::vector<double> quad_err;
  std::vector<double> asymptotic;
  double g = 0.0;
  double zeta_star = std::numeric_limits<double>::quiet_NaN();
  double a_coeff = std::numeric_limits<double>::quiet_NaN();
  int nodes_used = 0;
  bool converged = false;
  std::string contour_kind;
  std::vector<std::string> warnings;
};

/// Contour used for the decay integrals of profile p (reduced), inside the resolvent set.
inline Contour decay_contour(const CorrelationProfile& p, double epsilon, int n, double zeta_star) {
  cplx rho;
  if (is_constant_profile(p, &rho)) return dilated_ellipse_contour(rho, epsilon, n);
  double radius;
  if (std::isfinite(zeta_star)) {
    radius = (1.0 + epsilon) * zeta_star;
  } else {
    // General T: no rightmost-point theory; use a circle outside the a priori
    // bound sqrt(r(S)) (1 + rho_hat) of the spectrum.
    radius = (1.0 + epsilon) * std::sqrt(spectral_radius_nonneg(p.s, 1e-10)) * (1.0 + validate_profile(p, 1).rho_hat);
  }
  Contour c = circle_contour(radius, n);
  c.epsilon = epsilon;
  return c;
}

/// E||u_t||^2 = tr_N e^{t(g X^* - 1)} e^{t(g X - 1)} in the large-N limit, by the
/// double contour integral with node doubling until successive values agree.
inline DecayCurve decay_curve(const CorrelationProfile& p_in, double g, const std::vector<double>& times,
                              const DecayConfig& cfg = {}) {
  if (!(g > 0.0)) fail(ErrorKind::InvalidArgument, "decay_curve: g must be positive");
  for (double t : times)
    if (!(t >= 0.0)) fail(ErrorKind::InvalidArgument, "decay_curve: times must be nonnegative");
  const CorrelationProfile p = reduce_profile(p_in).profile;
  DecayCurve out;
  out.times = times;
  out.g = g;
  const bool nonneg_t = has_nonneg_real_t(p);
  if (nonneg_t) {
    const SingularityData sd = coefficient_A(p);
    out.zeta_star = sd.zeta_star;
    out.a_coeff = sd.a_coeff;
    if (g > 1.0 / out.zeta_star * (1.0 + 1e-12))
      fail(ErrorKind::InvalidArgument, "decay_curve: g must not exceed 1/zeta*");
  }
  double t_max = 0.0;
  for (double t : times) t_max = std::max(t_max, t);
  int n = cfg.n_min > 0 ? cfg.n_min : std::max(128, 16 * static_cast<int>(std::ceil(std::sqrt(g * t_max))));
  n = std::min(n, cfg.n_cap);

  const std::size_t m = times.size();
  std::vector<cplx> prev(m, cplx(std::numeric_limits<double>::quiet_NaN()));
  std::vector<cplx> cur(m);
  out.deterministic.assign(m, 0.0);
  out.quad_err.assign(m, std::numeric_limits<double>::infinity());
  for (;;) {
    const Contour c = decay_contour(p, cfg.epsilon, n, out.zeta_star);
    out.contour_kind = c.kind;
    const CMat kmat = detail::kernel_matrix(detail::node_b_values(c, p, cfg.threads), p, cfg.threads);
    bool all_ok = true;
    for (std::size_t j = 0; j < m; ++j) {
      const double t = times[j];
      auto f = [&](cplx z) { return std::exp(t * (g * z - 1.0)); };
      cur[j] = trace_fg_from_kernel(c, kmat, f, f);
      const double diff = std::abs(cur[j] - prev[j]);
      const double err = std::isfinite(diff) ? diff + std::abs(cur[j].imag()) : std::numeric_limits<double>::infinity();
      out.quad_err[j] = err;
      if (!(diff <= cfg.rel_tol * std::abs(cur[j]))) all_ok = false;
    }
    for (std::size_t j = 0; j < m; ++j) out.deterministic[j] = cur[j].real();
    out.nodes_used = n;
    if (all_ok) {
      out.converged = true;
      break;
    }
    if (2 * n > cfg.n_cap) {
      out.warnings.push_back("decay_curve: node cap reached before the refinement tolerance was met");
      break;
    }
    prev = cur;
    n *= 2;
  }
  out.asymptotic.assign(m, std::numeric_limits<double>::quiet_NaN());
  if (nonneg_t) {
    for (std::size_t j = 0; j < m; ++j) {
      const double t = times[j];
      if (t > 0.0)
        out.asymptotic[j] = out.a_coeff * std::exp(2.0 * t * (g * out.zeta_star - 1.0)) / std::sqrt(2.0 * kPi * g * t);
    }
  }
  return out;
}

}  // namespace ellspec
