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

// Modified Bessel functions I_k(z) of integer order and complex argument, and
// the closed forms of the elliptic-ensemble decay built from them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "ellspec/common.hpp"

namespace ellspec {

namespace detail {

inline constexpr cplx kNegInfLog{-std::numeric_limits<double>::infinity(), 0.0};

inline bool use_bessel_series(cplx z) {
  const double az = std::abs(z);
  // The ascending series cancels by a factor ~e^{|z| - |Re z|}; keep that below e^5.
  return az <= 20.0 && az - std::abs(z.real()) <= 5.0;
}

// log I_k(z) from the ascending series.
inline cplx bessel_log_series(int k, cplx z) {
  if (z == cplx(0.0)) return k == 0 ? cplx(0.0) : kNegInfLog;
  const cplx q = 0.25 * z * z;
  cplx term = 1.0, sum = 1.0;
  const double az = std::abs(z);
  for (int m = 0; m < 500; ++m) {
    term *= q / (static_cast<double>(m + 1) * static_cast<double>(k + m + 1));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum) && m > 0.5 * az) break;
  }
  return static_cast<double>(k) * std::log(0.5 * z) - std::lgamma(static_cast<double>(k) + 1.0) + std::log(sum);
}

// log I_k(z), k = 0..kmax, by backward recurrence of the ratios
// r_j = I_j / I_{j-1} normalized with e^z = I_0 + 2 sum_{k>=1} I_k. Re z >= 0.
inline std::vector<cplx> bessel_log_miller(int kmax, cplx z) {
  const double az = std::abs(z);
  const int m = std::max(kmax, static_cast<int>(std::ceil(az))) + 30 + static_cast<int>(std::ceil(8.0 * std::cbrt(az)));
  std::vector<cplx> r(m + 2, cplx(0.0));
  for (int j = m; j >= 1; --j) r[j] = 1.0 / (2.0 * j / z + r[j + 1]);
  cplx prod = 1.0, norm = 1.0;
  for (int j = 1; j <= m; ++j) {
    prod *= r[j];
    norm += 2.0 * prod;
    if (std::abs(prod) < 1e-300) break;
  }
  std::vector<cplx> out(kmax + 1);
  out[0] = z - std::log(norm);
  for (int k = 1; k <= kmax; ++k) out[k] = out[k - 1] + std::log(r[k]);
  return out;
}

}  // namespace detail

/// log I_k(z) for k = 0..kmax (complex logarithm; imaginary part on an
/// arbitrary branch). Entries are -inf where I_k(z) = 0 exactly.
inline std::vector<cplx> bessel_i_log_sequence(int kmax, cplx z) {
  if (kmax < 0) fail(ErrorKind::InvalidArgument, "bessel_i_log_sequence: kmax must be >= 0");
  if (z == cplx(0.0)) {
    std::vector<cplx> out(kmax + 1, detail::kNegInfLog);
    out[0] = 0.0;
    return out;
  }
  if (detail::use_bessel_series(z)) {
    std::vector<cplx> out(kmax + 1);
    for (int k = 0; k <= kmax; ++k) out[k] = detail::bessel_log_series(k, z);
    return out;
  }
  if (z.real() >= 0.0) return detail::bessel_log_miller(kmax, z);
  // I_k(-z) = (-1)^k I_k(z)
  auto out = detail::bessel_log_miller(kmax, -z);
  for (int k = 1; k <= kmax; k += 2) out[k] += cplx(0.0, kPi);
  return out;
}

/// Exponentially scaled values e^{-|Re z|} I_k(z), k = 0..kmax.
inline std::vector<cplx> bessel_i_scaled_sequence(int kmax, cplx z) {
  auto logs = bessel_i_log_sequence(kmax, z);
  std::vector<cplx> out(logs.size());
  const double shift = std::abs(z.real());
  for (std::size_t k = 0; k < logs.size(); ++k) out[k] = std::exp(logs[k] - shift);
  return out;
}

/// e^{-|Re z|} I_k(z); I_{-k} = I_k.
inline cplx bessel_i_scaled(int k, cplx z) {
  k = std::abs(k);
  if (detail::use_bessel_series(z)) return std::exp(detail::bessel_log_series(k, z) - std::abs(z.real()));
  return bessel_i_scaled_sequence(k, z)[k];
}

/// I_k(z) for integer k and complex z. Throws Overflow if |Re z| > 700.
inline cplx bessel_i(int k, cplx z) {
  if (std::abs(z.real()) > 700.0) fail(ErrorKind::Overflow, "bessel_i: |Re z| > 700 overflows double precision");
  return bessel_i_scaled(k, z) * std::exp(std::abs(z.real()));
}

// ---------------------------------------------------------------------------
// Elliptic ensemble decay.

struct BesselSeriesResult {
  double value = 0.0;
  double log_value = 0.0;        // log(value), finite even when value overflows
  int terms_used = 0;
  double truncation_bound = 0.0;  // first omitted term relative to value
};

/// |1 + rho| = sqrt(2 Re rho + |rho|^2 + 1), the rightmost point of the ellipse.
inline double elliptic_zeta_star(cplx rho) { return std::sqrt(2.0 * rho.real() + std::norm(rho) + 1.0); }

/// Coupling g = 1/zeta* at which the exponential rate vanishes.
inline double critical_g(cplx rho) { return 1.0 / elliptic_zeta_star(rho); }

/// e^{-2t} sum_{j>=1} |rho|^{-j} |(j/tg) I_j(2 sqrt(rho) tg)|^2, summed in log space.
inline BesselSeriesResult decay_series(cplx rho, double g, double t, double tol = 1e-15) {
  const double ar = std::abs(rho);
  if (!(ar > 0.0 && ar < 1.0)) fail(ErrorKind::InvalidArgument, "decay_series: need 0 < |rho| < 1");
  if (!(g > 0.0) || !(t >= 0.0)) fail(ErrorKind::InvalidArgument, "decay_series: need g > 0 and t >= 0");
  BesselSeriesResult out;
  if (t == 0.0) {
    out.value = 1.0;
    out.log_value = 0.0;
    out.terms_used = 1;
    return out;
  }
  const double tg = t * g;
  const cplx w = 2.0 * std::sqrt(rho) * tg;
  const double onset = std::exp(1.0) * std::sqrt(ar) * tg;
  const double lr = std::log(ar);
  int jmax = static_cast<int>(std::ceil(onset)) + 64;
  for (;;) {
    const auto logs = bessel_i_log_sequence(jmax, w);
    std::vector<double> lt(jmax + 1, -std::numeric_limits<double>::infinity());
    for (int j = 1; j <= jmax; ++j)
      lt[j] = -j * lr + 2.0 * std::log(j / tg) + 2.0 * logs[j].real() - 2.0 * t;
    double lmax = -std::numeric_limits<double>::infinity();
    double acc = 0.0;  // partial sum scaled by e^{-lmax}
    for (int j = 1; j < jmax; ++j) {
      if (lt[j] > lmax) {
        acc = acc * std::exp(lmax - lt[j]) + 1.0;
        lmax = lt[j];
      } else {
        acc += std::exp(lt[j] - lmax);
      }
      const double log_partial = lmax + std::log(acc);
      if (j > onset && lt[j] < lt[j - 1] && lt[j] - log_partial < std::log(tol)) {
        out.log_value = log_partial;
        out.value = std::exp(log_partial);
        out.terms_used = j;
        out.truncation_bound = std::exp(lt[j + 1] - log_partial);
        return out;
      }
    }
    jmax *= 2;
  }
}

/// Leading large-t behaviour of decay_series, returned as a logarithm.
inline double log_decay_asymptotic(cplx rho, double g, double t) {
  const double zs = elliptic_zeta_star(rho);
  const double coeff = (1.0 + std::norm(rho)) - 2.0 * ((rho + std::norm(rho)) / (rho + 1.0)).real();
  return std::log(coeff) + 2.0 * t * (g * zs - 1.0) - 0.5 * std::log(2.0 * kPi * 2.0 * t * g * zs);
}

inline double decay_asymptotic(cplx rho, double g, double t) {
  if (!(std::abs(rho) < 1.0)) fail(ErrorKind::InvalidArgument, "decay_asymptotic: need |rho| < 1");
  if (!(t > 0.0) || !(g > 0.0)) fail(ErrorKind::InvalidArgument, "decay_asymptotic: need g, t > 0");
  return std::exp(log_decay_asymptotic(rho, g, t));
}

/// The full-lattice sum sum_{j in Z} collapsed by Graf's addition theorem:
/// e^{-2t}[(1+|rho|^2) I_0(W) - 2 Re((rho+|rho|^2)/(rho+1)) I_2(W)], W = 2 tg |1+rho|.
inline double graf_closed_form(cplx rho, double g, double t) {
  const double wv = 2.0 * t * g * elliptic_zeta_star(rho);
  const auto iv = bessel_i_scaled_sequence(2, cplx(wv, 0.0));
  const double c2 = 2.0 * ((rho + std::norm(rho)) / (rho + 1.0)).real();
  return std::exp(wv - 2.0 * t) * ((1.0 + std::norm(rho)) * iv[0].real() - c2 * iv[2].real());
}

/// Upper bound e^{4|Re sqrt(rho)| tg} |rho|(1+|rho|)/((tg)^2 (1-|rho|)^3) on
/// sum_{j<=-1} |rho|^{-j} |(j/tg) I_j(2 sqrt(rho) tg)|^2 (without the e^{-2t}).
inline double negative_tail_bound(cplx rho, double g, double t) {
  const double ar = std::abs(rho);
  if (!(ar < 1.0)) fail(ErrorKind::InvalidArgument, "negative_tail_bound: need |rho| < 1");
  const double tg = t * g;
  return std::exp(4.0 * std::abs(std::sqrt(rho).real()) * tg) * ar * (1.0 + ar) / (tg * tg * std::pow(1.0 - ar, 3));
}

/// Both sides of Graf's addition theorem,
///   sum_{|n|<=n_terms} c^n I_{n+nu}(x) I_n(y) = (P/w)^nu I_nu(w),
/// with P = x + y/c, Q = x + y c and w = sqrt(P Q) (principal root; the
/// right side is independent of the sign of w).
inline std::pair<cplx, cplx> graf_check(cplx x, cplx y, cplx c, int nu, int n_terms) {
  if (n_terms < 1) fail(ErrorKind::InvalidArgument, "graf_check: n_terms must be >= 1");
  if (c == cplx(0.0)) fail(ErrorKind::InvalidArgument, "graf_check: c must be nonzero");
  cplx lhs = 0.0;
  for (int n = -n_terms; n <= n_terms; ++n) {
    lhs += std::pow(c, n) * bessel_i(n + nu, x) * bessel_i(n, y);
  }
  const cplx p = x + y / c;
  const cplx q = x + y * c;
  const cplx w = std::sqrt(p * q);
  const int an = std::abs(nu);
  cplx rhs;
  if (std::abs(w) < 1e-7) {
    // I_nu(w) ~ (w/2)^nu / nu!
    rhs = std::pow(0.5 * p, an) / std::tgamma(an + 1.0);
    if (nu < 0) rhs = std::pow(0.5 * q, an) / std::tgamma(an + 1.0);
  } else {
    rhs = std::pow(p / w, nu) * bessel_i(nu, w);
  }
  return {lhs, rhs};
}

}  // namespace ellspec
