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

// Shape of the self-consistent pseudospectrum: the closed-form ellipse, the
// rightmost real point zeta*, and level sets of the stability gap.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "ellspec/common.hpp"
#include "ellspec/dyson.hpp"
#include "ellspec/ensemble.hpp"
#include "ellspec/parallel.hpp"
#include "ellspec/perron.hpp"

namespace ellspec {

enum class DomainKind { EllipseClosedForm, TracedLevelSet };

struct SpectralDomain {
  DomainKind kind = DomainKind::EllipseClosedForm;
  std::vector<cplx> boundary;                 // closed, counter-clockwise; last point != first
  std::vector<std::vector<cplx>> components;  // every traced loop (boundary is the longest)
  double zeta_star = std::numeric_limits<double>::quiet_NaN();
  double level = 0.0;
  int failed_cells = 0;  // grid nodes where continuation failed (classified interior)
};

/// Signed area of a closed polyline (positive when counter-clockwise).
inline double signed_area(const std::vector<cplx>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const cplx p = poly[i], q = poly[(i + 1) % poly.size()];
    a += p.real() * q.imag() - q.real() * p.imag();
  }
  return 0.5 * a;
}

/// Boundary of E_rho: zeta(phi) = e^{i theta/2}(|rho| e^{i phi} + e^{-i phi}),
/// listed counter-clockwise.
inline SpectralDomain ellipse_boundary(cplx rho, int n_points) {
  if (!(std::abs(rho) < 1.0)) fail(ErrorKind::InvalidArgument, "ellipse_boundary: need |rho| < 1");
  if (n_points < 3) fail(ErrorKind::InvalidArgument, "ellipse_boundary: need at least 3 points");
  SpectralDomain d;
  d.kind = DomainKind::EllipseClosedForm;
  const double r = std::abs(rho);
  const cplx rot = std::polar(1.0, 0.5 * std::arg(rho));
  d.boundary.reserve(n_points);
  for (int k = 0; k < n_points; ++k) {
    // phi decreasing makes the dominant e^{-i phi} term run counter-clockwise.
    const double phi = -2.0 * kPi * k / n_points;
    d.boundary.push_back(rot * (r * std::polar(1.0, phi) + std::polar(1.0, -phi)));
  }
  d.components = {d.boundary};
  d.zeta_star = std::sqrt(1.0 + r * r + 2.0 * rho.real());
  d.level = 0.0;
  return d;
}

/// True if zeta lies strictly outside E_rho (|rho| < 1).
inline bool outside_ellipse(cplx zeta, cplx rho) {
  // In rotated coordinates w = e^{-i theta/2} zeta the ellipse has semi-axes 1 +- |rho|.
  const cplx w = zeta * std::polar(1.0, -0.5 * std::arg(rho));
  const double a = 1.0 + std::abs(rho), b = 1.0 - std::abs(rho);
  if (b == 0.0) return w.imag() != 0.0 || std::abs(w.real()) > a;
  return (w.real() * w.real()) / (a * a) + (w.imag() * w.imag()) / (b * b) > 1.0;
}

namespace detail {

// r(D_{b^2} S) - 1 for real negative b on the real axis.
inline double zeta_star_objective(const CVec& b, const Mat& s) {
  const Mat m = b.cwiseAbs2().asDiagonal() * s;
  return spectral_radius_nonneg(m, 1e-15) - 1.0;
}

}  // namespace detail

struct ZetaStarResult {
  double zeta_star = 0.0;
  CVec b;               // the Dyson branch continued to zeta* (analytic there)
  double objective = 0.0;  // r(D_{b^2} S) - 1 at zeta*
};

/// Root of r(D_{b(x)^2} S) = 1 on the real axis, approached from the right.
inline ZetaStarResult find_zeta_star_full(const CorrelationProfile& p, double tol = 1e-12) {
  if (!has_nonneg_real_t(p)) fail(ErrorKind::NotApplicable, "find_zeta_star: T has negative or complex entries");
  if (!(tol > 0.0)) fail(ErrorKind::InvalidArgument, "find_zeta_star: tol must be positive");
  const double rs = spectral_radius_nonneg(p.s, 1e-12);
  if (!(rs > 0.0)) fail(ErrorKind::BracketFailure, "find_zeta_star: r(S) = 0");
  const double limit = std::max(10.0 * std::sqrt(rs), 4.0 * (1.0 + std::sqrt(rs)));
  double hi = 4.0 * (1.0 + std::sqrt(rs));
  DysonOptions opt;
  opt.tol = 1e-13;
  CVec b_hi;
  double g_hi = 0.0;
  for (;;) {
    try {
      b_hi = solve_b(hi, p, opt).b;
    } catch (const NumericalError&) {
      b_hi.resize(0);
    }
    if (b_hi.size() > 0) {
      g_hi = detail::zeta_star_objective(b_hi, p.s);
      if (g_hi < 0.0) break;
    }
    hi *= 2.0;
    if (hi > 4.0 * limit) fail(ErrorKind::BracketFailure, "find_zeta_star: r(D_{b^2} S) >= 1 at every bracket start");
  }
  // Descend geometrically along the analytic branch until the objective turns
  // nonnegative; shrink the step when Newton fails (a branch point may sit just
  // below zeta*, as for the elliptic ensemble near |rho| = 1).
  double lo = hi;
  CVec b_lo = b_hi;
  double g_lo = g_hi;
  double frac = 0.1;
  while (g_lo < 0.0) {
    hi = lo;
    b_hi = b_lo;
    g_hi = g_lo;
    for (;;) {
      lo = (1.0 - frac) * hi;
      if (lo < 1e-8 * limit) fail(ErrorKind::BracketFailure, "find_zeta_star: objective never reaches zero");
      try {
        b_lo = track_b(lo, p, b_hi, opt);
        break;
      } catch (const NumericalError&) {
        frac *= 0.5;
        if (frac < 1e-13) fail(ErrorKind::BracketFailure, "find_zeta_star: branch lost before bracketing zeta*");
      }
    }
    g_lo = detail::zeta_star_objective(b_lo, p.s);
  }
  if (g_lo == 0.0) return {lo, b_lo, 0.0};
  // Bisection with a secant proposal kept inside the bracket.
  double x = hi, gx = g_hi;
  CVec bx = b_hi;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (it % 2 == 0) {
      const double sec = hi - g_hi * (hi - lo) / (g_hi - g_lo);
      if (sec > lo && sec < hi) mid = sec;
    }
    bx = track_b(mid, p, (mid - lo) < (hi - mid) ? b_lo : b_hi, opt);
    x = mid;
    gx = detail::zeta_star_objective(bx, p.s);
    if (std::abs(gx) <= tol || hi - lo <= 4e-16 * hi) break;
    if (gx < 0.0) {
      hi = mid;
      g_hi = gx;
      b_hi = bx;
    } else {
      lo = mid;
      g_lo = gx;
      b_lo = bx;
    }
  }
  return {x, bx, gx};
}

/// zeta* for a profile with entry-wise nonnegative T.
inline double find_zeta_star(const CorrelationProfile& p, double tol = 1e-12) {
  return find_zeta_star_full(reduce_profile(p).profile, tol).zeta_star;
}

// ---------------------------------------------------------------------------
// Rasterized stability gap and marching squares.

struct DeltaRaster {
  std::vector<double> xs, ys;  // node coordinates
  Mat delta;                   // delta(i, j) at (xs[i], ys[j]); 0 where continuation failed
  int failed = 0;
};

/// Delta_zeta on a res x res grid over [-radius, radius]^2.
inline DeltaRaster raster_delta(const CorrelationProfile& p, double radius, int resolution, int threads = 1) {
  if (resolution < 2) fail(ErrorKind::InvalidArgument, "raster_delta: resolution must be >= 2");
  const CorrelationProfile red = reduce_profile(p).profile;
  DeltaRaster r;
  r.xs.resize(resolution);
  r.ys.resize(resolution);
  for (int i = 0; i < resolution; ++i) {
    r.xs[i] = -radius + 2.0 * radius * i / (resolution - 1);
    r.ys[i] = r.xs[i];
  }
  r.delta = Mat::Zero(resolution, resolution);
  std::vector<char> failed(static_cast<std::size_t>(resolution) * resolution, 0);
  parallel_for(failed.size(), threads, [&](std::size_t k) {
    const int i = static_cast<int>(k % resolution), j = static_cast<int>(k / resolution);
    const cplx z(r.xs[i], r.ys[j]);
    if (z == cplx(0.0)) {
      failed[k] = 1;
      return;
    }
    try {
      r.delta(i, j) = solve_b(z, red).delta;
    } catch (const NumericalError&) {
      failed[k] = 1;
    }
  });
  for (char f : failed) r.failed += f;
  return r;
}

namespace detail {

// Closed loops of {f = 0} for a node field f(i, j) by marching squares.
inline std::vector<std::vector<cplx>> marching_squares(const std::vector<double>& xs, const std::vector<double>& ys,
                                                       const Mat& f) {
  const int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());
  auto hkey = [&](int i, int j) { return 2L * (static_cast<long>(j) * nx + i); };      // (i,j)-(i+1,j)
  auto vkey = [&](int i, int j) { return 2L * (static_cast<long>(j) * nx + i) + 1; };  // (i,j)-(i,j+1)
  auto lerp = [](double a, double fa, double b, double fb) { return a + (b - a) * fa / (fa - fb); };
  std::map<long, cplx> point;
  std::map<long, std::vector<long>> adj;
  auto edge_point = [&](long key, int i, int j, bool horizontal) {
    if (point.count(key)) return;
    if (horizontal)
      point[key] = cplx(lerp(xs[i], f(i, j), xs[i + 1], f(i + 1, j)), ys[j]);
    else
      point[key] = cplx(xs[i], lerp(ys[j], f(i, j), ys[j + 1], f(i, j + 1)));
  };
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      // corners counter-clockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1); edges bottom, right, top, left
      const double c[4] = {f(i, j), f(i + 1, j), f(i + 1, j + 1), f(i, j + 1)};
      const long keys[4] = {hkey(i, j), vkey(i + 1, j), hkey(i, j + 1), vkey(i, j)};
      bool cross[4];
      for (int e = 0; e < 4; ++e) cross[e] = (c[e] > 0.0) != (c[(e + 1) % 4] > 0.0);
      const int count = cross[0] + cross[1] + cross[2] + cross[3];
      if (count == 0) continue;
      if (cross[0]) edge_point(keys[0], i, j, true);
      if (cross[1]) edge_point(keys[1], i + 1, j, false);
      if (cross[2]) edge_point(keys[2], i, j + 1, true);
      if (cross[3]) edge_point(keys[3], i, j, false);
      auto link = [&](int a, int b) {
        adj[keys[a]].push_back(keys[b]);
        adj[keys[b]].push_back(keys[a]);
      };
      if (count == 2) {
        int e0 = -1, e1 = -1;
        for (int e = 0; e < 4; ++e)
          if (cross[e]) (e0 < 0 ? e0 : e1) = e;
        link(e0, e1);
      } else {
        // Saddle: decide the pairing by the sign of the cell average.
        const bool center = 0.25 * (c[0] + c[1] + c[2] + c[3]) > 0.0;
        if (center == (c[0] > 0.0)) {
          link(0, 1);
          link(2, 3);
        } else {
          link(0, 3);
          link(1, 2);
        }
      }
    }
  }
  std::vector<std::vector<cplx>> loops;
  std::map<long, bool> seen;
  for (const auto& [start, nb] : adj) {
    if (seen[start]) continue;
    std::vector<cplx> loop;
    long prev = -1, cur = start;
    while (!seen[cur]) {
      seen[cur] = true;
      loop.push_back(point[cur]);
      const auto& n = adj[cur];
      long nxt = -1;
      for (long k : n)
        if (k != prev && !seen[k]) {
          nxt = k;
          break;
        }
      if (nxt < 0) break;
      prev = cur;
      cur = nxt;
    }
    if (loop.size() >= 3) loops.push_back(std::move(loop));
  }
  return loops;
}

}  // namespace detail

/// Level set {Delta_zeta = level} on a grid over the disk |zeta| <= zeta* + 1.
inline SpectralDomain trace_level_set(const CorrelationProfile& p, double level, int resolution, int threads = 1) {
  if (!(level > 0.0 && level <= 1.0)) fail(ErrorKind::InvalidArgument, "trace_level_set: level must be in (0, 1]");
  if (resolution < 32) fail(ErrorKind::InvalidArgument, "trace_level_set: resolution must be >= 32");
  SpectralDomain d;
  d.kind = DomainKind::TracedLevelSet;
  d.level = level;
  double extent;
  if (has_nonneg_real_t(p)) {
    d.zeta_star = find_zeta_star(p);
    extent = d.zeta_star + 1.0;
  } else {
    extent = std::sqrt(spectral_radius_nonneg(p.s, 1e-10)) * (1.0 + validate_profile(p, 1).rho_hat) + 1.0;
  }
  // Odd resolution keeps zeta = 0 on a node that is classified interior anyway.
  const DeltaRaster r = raster_delta(p, extent, resolution, threads);
  d.failed_cells = r.failed;
  Mat f = r.delta.array() - level;
  // Level 1 is the cap of Delta; compare against the radius 1/2 locus instead.
  if (level >= 1.0) {
    const CorrelationProfile red = reduce_profile(p).profile;
    for (int j = 0; j < resolution; ++j)
      for (int i = 0; i < resolution; ++i) {
        const cplx z(r.xs[i], r.ys[j]);
        f(i, j) = -1.0;
        if (r.delta(i, j) <= 0.0) continue;
        const CVec b = solve_b(z, red).b;
        f(i, j) = 1.0 / spectral_radius_nonneg(b.cwiseAbs2().asDiagonal() * red.s, 1e-10) - 2.0;
      }
  }
  d.components = detail::marching_squares(r.xs, r.ys, f);
  for (auto& loop : d.components)
    if (signed_area(loop) < 0.0) std::reverse(loop.begin(), loop.end());
  std::size_t best = 0;
  for (std::size_t k = 0; k < d.components.size(); ++k)
    if (d.components[k].size() > d.components[best].size()) best = k;
  if (!d.components.empty()) d.boundary = d.components[best];
  return d;
}

}  // namespace ellspec
