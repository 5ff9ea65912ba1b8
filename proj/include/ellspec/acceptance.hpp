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

// The end-to-end acceptance suite shared by the `verify` subcommand and the
// acceptance test binary. Each criterion reports pass/fail, the worst observed
// deviation and its runtime; the runtime budget is part of the verdict.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ellspec/bessel.hpp"
#include "ellspec/dyson.hpp"
#include "ellspec/geometry.hpp"
#include "ellspec/kernel.hpp"
#include "ellspec/montecarlo.hpp"
#include "ellspec/quadrature.hpp"

namespace ellspec {

enum class Tier { Quick, Full };

struct AcceptanceOptions {
  Tier tier = Tier::Full;
  int threads = 0;
  std::uint64_t seed = 20260101;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

namespace acceptance {

using Clock = std::chrono::steady_clock;

inline std::string sci(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

inline std::string fix(double v, int digits = 6) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

// Uniform point outside E_rho: the boundary map dilated by a factor in [1.02, 3].
inline cplx outside_ellipse_point(cplx rho, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double phi = 2.0 * kPi * u(rng), scale = 1.02 + 1.98 * u(rng);
  return scale * std::polar(1.0, 0.5 * std::arg(rho)) *
         (std::abs(rho) * std::polar(1.0, phi) + std::polar(1.0, -phi));
}

// 2-block profile: s_ij = 1.5/N for j < N/2 and 0.5/N otherwise (rows sum to 1),
// t_ij = rho sqrt(s_ij s_ji).
inline CorrelationProfile two_block_profile(int n, double rho) {
  CorrelationProfile p;
  p.s.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p.s(i, j) = (j < n / 2 ? 1.5 : 0.5) / n;
  p.t.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p.t(i, j) = rho * std::sqrt(p.s(i, j) * p.s(j, i));
  p.rho_bound = rho;
  return p;
}

inline std::vector<double> half_step_grid(double t_max) {
  std::vector<double> ts;
  for (int k = 1; 0.5 * k <= t_max + 1e-12; ++k) ts.push_back(0.5 * k);
  return ts;
}

// Solves lambda(zeta1, w) = 0 for w near `guess` by the secant method.
inline double zbar2_root(const CorrelationProfile& p, const SingularityData& sd, double zeta1, double guess) {
  auto f = [&](double w) { return lambda_near_zero(p, zeta1, w, sd.b, sd.v_r); };
  double w0 = guess, w1 = guess + 1e-6, f0 = f(w0), f1 = f(w1);
  for (int it = 0; it < 60 && f1 != f0; ++it) {
    const double w2 = w1 - f1 * (w1 - w0) / (f1 - f0);
    w0 = w1;
    f0 = f1;
    w1 = w2;
    f1 = f(w1);
    if (f1 == 0.0 || std::abs(w1 - w0) <= 2e-16 * std::abs(w1)) break;
  }
  return w1;
}

inline CriterionResult c1_dyson_closed_form(const AcceptanceOptions& o) {
  CriterionResult r{1, "Dyson/closed-form equivalence", false, "", 0.0, 10.0};
  std::mt19937_64 rng(derive_seed(o.seed, 1));
  double worst = 0.0;
  for (cplx rho : {cplx(0.3), cplx(0.5), std::polar(0.7, kPi / 4)}) {
    const auto p = constant_profiles(200, rho);
    for (int k = 0; k < 200; ++k) {
      const cplx z = outside_ellipse_point(rho, rng);
      const auto pr = solve_b(z, p);
      worst = std::max(worst, (pr.b.array() - solve_b_elliptic(z, rho)).abs().maxCoeff());
    }
  }
  r.passed = worst <= 1e-10;
  r.detail = "max |b - b_elliptic| = " + sci(worst) + " (tol 1e-10, 600 solves, N=200)";
  return r;
}

inline CriterionResult c2_kernel_cross_form(const AcceptanceOptions& o) {
  CriterionResult r{2, "Kernel cross-form equality", false, "", 0.0, 30.0};
  std::mt19937_64 rng(derive_seed(o.seed, 2));
  const int n = 200;
  const cplx rho(0.5);
  const auto pc = constant_profiles(n, rho);
  auto pi = two_block_profile(n, 0.0);
  pi.t.setZero();
  double worst_e = 0.0, worst_i = 0.0;
  for (int k = 0; k < 50; ++k) {
    const cplx z1 = outside_ellipse_point(rho, rng), z2 = outside_ellipse_point(rho, rng);
    const cplx ke = kernel_elliptic(z1, z2, rho);
    worst_e = std::max(worst_e, std::abs(kernel_general(z1, z2, pc).value - ke) / std::max(1.0, std::abs(ke)));
    // Independent case: the spectrum lies in the unit disk (r(S) = 1).
    const cplx w1 = outside_ellipse_point(0.0, rng), w2 = outside_ellipse_point(0.0, rng);
    const cplx ki = kernel_independent(w1, w2, pi.s);
    worst_i = std::max(worst_i, std::abs(kernel_general(w1, w2, pi).value - ki) / std::max(1.0, std::abs(ki)));
  }
  r.passed = worst_e <= 1e-10 && worst_i <= 1e-10;
  r.detail = "elliptic " + sci(worst_e) + ", independent " + sci(worst_i) + " (tol 1e-10, 50 pairs, N=200)";
  return r;
}

inline CriterionResult c3_bessel_vs_contour(const AcceptanceOptions& o) {
  CriterionResult r{3, "Bessel/contour double derivation", false, "", 0.0, 120.0};
  const double rho = 0.5, g = critical_g(rho);
  const std::vector<double> ts{1.0, 5.0, 10.0, 20.0};
  DecayConfig cfg;
  cfg.threads = o.threads;
  const auto dc = decay_curve(constant_profiles(4, rho), g, ts, cfg);
  double worst = 0.0;
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const double s = decay_series(rho, g, ts[j]).value;
    worst = std::max(worst, std::abs(dc.deterministic[j] - s) / s);
  }
  r.passed = dc.converged && worst <= 1e-6;
  r.detail = "max relative difference " + sci(worst) + " (tol 1e-6, " + std::to_string(dc.nodes_used) + " nodes)";
  return r;
}

inline CriterionResult c4_graf(const AcceptanceOptions& o) {
  CriterionResult r{4, "Graf identity", false, "", 0.0, 1.0};
  std::mt19937_64 rng(derive_seed(o.seed, 4));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto disk = [&](double rad) { return std::polar(rad * std::sqrt(u(rng)), 2.0 * kPi * u(rng)); };
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const cplx x = disk(3.0), y = disk(3.0);
    const cplx c = std::polar(0.5 + 1.5 * u(rng), 2.0 * kPi * u(rng));
    const int nu = k % 3;
    const auto [lhs, rhs] = graf_check(x, y, c, nu, 80);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  r.passed = worst < 1e-10;
  r.detail = "max |lhs - rhs| = " + sci(worst) + " (tol 1e-10, 20 draws)";
  return r;
}

inline CriterionResult c5_corrected_asymptotic(const AcceptanceOptions&) {
  CriterionResult r{5, "Corrected asymptotic ratio at t=200", true, "", 0.0, 5.0};
  std::string d;
  for (double rho : {0.2, 0.5, 0.8}) {
    const double g = critical_g(rho);
    const double ratio = std::exp(decay_series(rho, g, 200.0).log_value - log_decay_asymptotic(rho, g, 200.0));
    const bool ok = ratio >= 0.98 && ratio <= 1.02;
    r.passed = r.passed && ok;
    d += "rho=" + fix(rho, 1) + ": " + fix(ratio, 7) + (ok ? "" : " (out of band)") + "; ";
  }
  r.detail = d + "band [0.98, 1.02]";
  return r;
}

inline CriterionResult c6_critical_slope(const AcceptanceOptions&) {
  CriterionResult r{6, "Critical t^-1/2 law", false, "", 0.0, 10.0};
  const double rho = 0.5, g = critical_g(rho);
  const int m = 60;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 0; k < m; ++k) {
    const double t = 20.0 * std::pow(10.0, k / (m - 1.0));
    const double x = std::log(t), y = decay_series(rho, g, t).log_value;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  r.passed = std::abs(slope + 0.5) <= 0.05;
  r.detail = "slope " + fix(slope, 5) + " over t in [20, 200] (target -0.5 +- 0.05)";
  return r;
}

inline CriterionResult c7_monte_carlo(const AcceptanceOptions& o) {
  const bool full = o.tier == Tier::Full;
  CriterionResult r{7, "Monte Carlo vs theory", false, "", 0.0, 600.0};
  const int n = full ? 500 : 200;
  const double rho = 0.5;
  McStudy st;
  st.elliptic = EllipticParams{n, rho, true};
  st.n = n;
  st.g = critical_g(rho);
  st.times = half_step_grid(10.0);
  st.replicas = full ? 20 : 10;
  st.base_seed = derive_seed(o.seed, 7);
  st.threads = o.threads;
  const auto res = run_study(st);
  const double band = 5.0 / std::sqrt(n);
  double worst = 0.0;
  int within_z = 0;
  for (std::size_t j = 0; j < res.times.size(); ++j) {
    worst = std::max(worst, std::abs(res.mean[j] - res.reference[j]));
    within_z += std::abs(res.z[j]) <= 4.0 ? 1 : 0;
  }
  const double frac = static_cast<double>(within_z) / res.times.size();
  r.passed = worst <= band && frac >= 0.95 && res.failed_replicas.empty();
  r.detail = "N=" + std::to_string(n) + ", " + std::to_string(st.replicas) + " replicas: max |mean - series| = " +
             sci(worst) + " (band " + fix(band, 4) + "), |z|<=4 at " + fix(100 * frac, 1) + "% of t";
  return r;
}

inline CriterionResult c8_spectral_concentration(const AcceptanceOptions& o) {
  const bool full = o.tier == Tier::Full;
  CriterionResult r{8, "Spectral concentration", false, "", 0.0, 300.0};
  const int n = full ? 1000 : 400, reps = full ? 10 : 4;
  const double rho = 0.5, d = std::pow(n, -0.25);
  const double a = 1 + rho + d, b = 1 - rho + d;
  std::vector<int> inside(reps, 0);
  parallel_for(static_cast<std::size_t>(reps), o.threads, [&](std::size_t k) {
    const auto ev = empirical_spectrum(sample_elliptic({n, rho, true}, derive_seed(derive_seed(o.seed, 8), k)));
    for (cplx z : ev) inside[k] += (z.real() * z.real() / (a * a) + z.imag() * z.imag() / (b * b) <= 1.0) ? 1 : 0;
  });
  long total = 0;
  int worst = n;
  for (int c : inside) {
    total += c;
    worst = std::min(worst, c);
  }
  const double frac = static_cast<double>(total) / (static_cast<double>(n) * reps);
  r.passed = frac >= 0.99;
  r.detail = "N=" + std::to_string(n) + ", " + std::to_string(reps) + " replicas: " + fix(100 * frac, 3) +
             "% inside (worst replica " + fix(100.0 * worst / n, 2) + "%)";
  return r;
}

inline CriterionResult c9_general_profile(const AcceptanceOptions& o) {
  const bool full = o.tier == Tier::Full;
  CriterionResult r{9, "Elliptic-type general-profile consistency", false, "", 0.0, 900.0};
  const int n = full ? 500 : 200;
  const auto p = two_block_profile(n, 0.4);
  const auto sd = coefficient_A(p);
  const double zs = sd.zeta_star, g = 1.0 / zs;

  McStudy st;
  st.profile = p;
  st.n = n;
  st.g = g;
  st.times = half_step_grid(8.0);
  st.replicas = full ? 20 : 10;
  st.base_seed = derive_seed(o.seed, 9);
  st.threads = o.threads;
  const auto res = run_study(st);
  const double band = 5.0 / std::sqrt(n);
  double worst = 0.0;
  for (std::size_t j = 0; j < res.times.size(); ++j) worst = std::max(worst, std::abs(res.mean[j] - res.reference[j]));

  // Amplitude: least-squares fit of c0 + c1 / t to det sqrt(2 pi g t) e^{-2t(g zeta* - 1)} on [20, 100].
  std::vector<double> ts;
  for (double t = 20.0; t <= 100.0 + 1e-9; t += 5.0) ts.push_back(t);
  DecayConfig cfg;
  cfg.threads = o.threads;
  const auto dc = decay_curve(p, g, ts, cfg);
  double s1 = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const double t = ts[j];
    const double y = dc.deterministic[j] * std::sqrt(2.0 * kPi * g * t) * std::exp(-2.0 * t * (g * zs - 1.0));
    const double x = 1.0 / t;
    s1 += 1;
    sx += x;
    sxx += x * x;
    sy += y;
    sxy += x * y;
  }
  const double c0 = (sxx * sy - sx * sxy) / (s1 * sxx - sx * sx);
  const double amp_err = std::abs(c0 - sd.a_coeff) / sd.a_coeff;

  r.passed = std::isfinite(zs) && worst <= band && amp_err <= 0.10 && dc.converged && res.failed_replicas.empty();
  r.detail = "zeta*=" + fix(zs, 9) + "; N=" + std::to_string(n) + " max |mean - det| = " + sci(worst) + " (band " +
             fix(band, 4) + "); fitted amplitude " + fix(c0, 6) + " vs A=" + fix(sd.a_coeff, 6) + " (" +
             fix(100 * amp_err, 2) + "%, tol 10%)";
  return r;
}

inline CriterionResult c10_amplitude_elliptic(const AcceptanceOptions&) {
  CriterionResult r{10, "A(S,T) elliptic cross-check", false, "", 0.0, 60.0};
  double worst = 0.0;
  for (double rho : {0.0, 0.25, 0.5}) {
    const auto sd = coefficient_A(constant_profiles(200, rho));
    const double g = 1.0 / sd.zeta_star;
    worst = std::max(worst, std::abs(sd.a_coeff - (1 - rho) * (1 - rho) * std::sqrt(g / 2.0)));
  }
  r.passed = worst <= 1e-6;
  r.detail = "max |A - (1-rho)^2 sqrt(g/2)| = " + sci(worst) + " (tol 1e-6, N=200)";
  return r;
}

inline CriterionResult c11_derivative_oracles(const AcceptanceOptions&) {
  CriterionResult r{11, "Derivative oracles", false, "", 0.0, 30.0};
  const double rho = 0.5;
  const auto p = constant_profiles(50, rho);

  // d b / d zeta against central differences (holomorphic: any direction).
  double err_b = 0.0;
  for (cplx z : {cplx(2.0, 0.3), cplx(-1.2, 1.1), cplx(0.4, -1.5)}) {
    const double h = 1e-5;
    const CVec fd = (solve_b(z + h, p).b - solve_b(z - h, p).b) / (2.0 * h);
    const CVec an = db_dzeta(solve_b(z, p), p);
    err_b = std::max(err_b, (an - fd).cwiseAbs().maxCoeff() / an.cwiseAbs().maxCoeff());
  }

  const auto sd = coefficient_A(p);
  const double zs = sd.zeta_star;
  // conj-partial_2 lambda: Richardson-extrapolated central differences in w2.
  auto dlam = [&](double h) {
    return (lambda_near_zero(p, zs, zs + h, sd.b, sd.v_r) - lambda_near_zero(p, zs, zs - h, sd.b, sd.v_r)) / (2 * h);
  };
  const double fd_lam = (4.0 * dlam(5e-4) - dlam(1e-3)) / 3.0;
  const double err_lam = std::abs(fd_lam - sd.d2_lambda) / std::abs(sd.d2_lambda);

  // Second derivative of conj z2(zeta1) along lambda = 0. The branch point of b
  // sits close to zeta*, so two Richardson levels remove the h^2 and h^4 terms.
  auto d2z = [&](double h) {
    const double zp = zbar2_root(p, sd, zs + h, zs - h), zm = zbar2_root(p, sd, zs - h, zs + h);
    return (zp - 2.0 * zs + zm) / (h * h);
  };
  const double d_h = d2z(5e-3), d_h2 = d2z(2.5e-3), d_h4 = d2z(1.25e-3);
  const double fd_z = (16.0 * (4.0 * d_h4 - d_h2) / 3.0 - (4.0 * d_h2 - d_h) / 3.0) / 15.0;
  const double err_z = std::abs(fd_z - sd.d2z2) / std::abs(sd.d2z2);

  r.passed = err_b <= 1e-6 && err_lam <= 1e-6 && err_z <= 1e-6;
  r.detail = "relative errors: db/dzeta " + sci(err_b) + ", d2 lambda " + sci(err_lam) + ", d2^2 z2 " + sci(err_z) +
             " (tol 1e-6)";
  return r;
}

}  // namespace acceptance

/// Runs all criteria in order, calling `on_result` after each one.
inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& o,
                                                   const std::function<void(const CriterionResult&)>& on_result = {}) {
  using Fn = CriterionResult (*)(const AcceptanceOptions&);
  static const Fn kCriteria[] = {
      acceptance::c1_dyson_closed_form, acceptance::c2_kernel_cross_form,     acceptance::c3_bessel_vs_contour,
      acceptance::c4_graf,              acceptance::c5_corrected_asymptotic,  acceptance::c6_critical_slope,
      acceptance::c7_monte_carlo,       acceptance::c8_spectral_concentration, acceptance::c9_general_profile,
      acceptance::c10_amplitude_elliptic, acceptance::c11_derivative_oracles};
  static const char* kNames[] = {"Dyson/closed-form equivalence",
                                 "Kernel cross-form equality",
                                 "Bessel/contour double derivation",
                                 "Graf identity",
                                 "Corrected asymptotic ratio at t=200",
                                 "Critical t^-1/2 law",
                                 "Monte Carlo vs theory",
                                 "Spectral concentration",
                                 "Elliptic-type general-profile consistency",
                                 "A(S,T) elliptic cross-check",
                                 "Derivative oracles"};
  std::vector<CriterionResult> out;
  int id = 0;
  for (Fn f : kCriteria) {
    ++id;
    const auto start = acceptance::Clock::now();
    CriterionResult r;
    try {
      r = f(o);
    } catch (const std::exception& e) {
      r = CriterionResult{id, kNames[id - 1], false, std::string("error: ") + e.what(), 0.0, 0.0};
    }
    r.seconds = std::chrono::duration<double>(acceptance::Clock::now() - start).count();
    if (r.budget_seconds > 0.0 && r.seconds > r.budget_seconds) {
      r.passed = false;
      r.detail += "; runtime over budget";
    }
    if (on_result) on_result(r);
    out.push_back(r);
  }
  return out;
}

/// One line per criterion: "[PASS] 3 Bessel/contour double derivation (1.2 s): detail".
inline std::string format_result(const CriterionResult& r) {
  std::ostringstream s;
  s.precision(2);
  s << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << " (" << std::fixed << r.seconds << " s";
  if (r.budget_seconds > 0.0) s << " / budget " << std::fixed << std::setprecision(0) << r.budget_seconds << " s";
  s << "): " << r.detail;
  return s.str();
}

}  // namespace ellspec
