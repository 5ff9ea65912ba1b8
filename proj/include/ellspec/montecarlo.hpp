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

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ellspec/bessel.hpp"
#include "ellspec/common.hpp"
#include "ellspec/ensemble.hpp"
#include "ellspec/parallel.hpp"
#include "ellspec/quadrature.hpp"

namespace ellspec {

namespace detail {

// e^z - 1 without cancellation for small |z|.
inline cplx expm1c(cplx z) {
  const double x = z.real(), y = z.imag();
  const double s = std::sin(0.5 * y);
  return {std::expm1(x) * std::cos(y) - 2.0 * s * s, std::exp(x) * std::sin(y)};
}

// (e^{ta} - e^{tb}) / (a - b), stable as a -> b.
inline cplx exp_divided_difference(cplx a, cplx b, double t) {
  const cplx d = t * (a - b);
  if (d == 0.0) return t * std::exp(t * b);
  return std::exp(t * b) * expm1c(d) / (a - b);
}

// e^{tU} for upper-triangular U by the Parlett recurrence, column by column.
inline CMat parlett_exp(const CMat& u, double t) {
  const Eigen::Index n = u.rows();
  CMat f = CMat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    f(j, j) = std::exp(t * u(j, j));
    for (Eigen::Index i = j - 1; i >= 0; --i) {
      cplx acc = u(i, j) * exp_divided_difference(u(j, j), u(i, i), t);
      const Eigen::Index len = j - i - 1;
      if (len > 0) {
        const cplx s = u.row(i).segment(i + 1, len).transpose().cwiseProduct(f.col(j).segment(i + 1, len)).sum() -
                       f.row(i).segment(i + 1, len).transpose().cwiseProduct(u.col(j).segment(i + 1, len)).sum();
        acc += s / (u(j, j) - u(i, i));
      }
      f(i, j) = acc;
    }
  }
  return f;
}

}  // namespace detail

struct EvolveReport {
  std::vector<double> values;  // (1/N) ||e^{t(gX - 1)}||_F^2 per time
  bool parlett_used = true;    // false when the guard rejected the Parlett path
  double guard_discrepancy = 0.0;
};

/// (1/N) ||e^{t(gX - I)}||_F^2 = tr_N e^{t(gX* - I)} e^{t(gX - I)} for each t.
/// One complex Schur factorization of gX - I is shared by all times; the
/// Parlett result at the largest time is checked against scaling-and-squaring
/// and, past a relative discrepancy of `guard_tol`, every time is recomputed
/// by scaling-and-squaring.
inline EvolveReport evolve_norm_report(const CMat& x, double g, const std::vector<double>& times,
                                       double guard_tol = 1e-8) {
  for (double t : times)
    if (!(t >= 0.0)) fail(ErrorKind::InvalidArgument, "evolve_norm: times must be nonnegative");
  const Eigen::Index n = x.rows();
  if (n == 0 || x.cols() != n) fail(ErrorKind::InvalidArgument, "evolve_norm: matrix must be square and nonempty");
  CMat a = g * x;
  a.diagonal().array() -= 1.0;
  EvolveReport rep;
  rep.values.assign(times.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::ComplexSchur<CMat> schur(a, false);
  if (schur.info() != Eigen::Success) {
    // The Frobenius norm needs the full exponential when no Schur form exists.
    rep.parlett_used = false;
    for (std::size_t k = 0; k < times.size(); ++k) rep.values[k] = CMat((times[k] * a).exp()).squaredNorm() * inv_n;
    return rep;
  }
  const CMat& u = schur.matrixT();
  // The Frobenius norm is unitarily invariant: ||Q e^{tU} Q*|| = ||e^{tU}||.
  for (std::size_t k = 0; k < times.size(); ++k)
    rep.values[k] = times[k] == 0.0 ? 1.0 : detail::parlett_exp(u, times[k]).squaredNorm() * inv_n;

  const auto it = std::max_element(times.begin(), times.end());
  if (it != times.end() && *it > 0.0) {
    const std::size_t k = static_cast<std::size_t>(it - times.begin());
    const double ref = CMat((*it * u).exp()).squaredNorm() * inv_n;
    rep.guard_discrepancy = std::abs(rep.values[k] - ref) / ref;
    if (!(rep.guard_discrepancy <= guard_tol)) {
      rep.parlett_used = false;
      for (std::size_t m = 0; m < times.size(); ++m)
        rep.values[m] = times[m] == 0.0 ? 1.0 : CMat((times[m] * u).exp()).squaredNorm() * inv_n;
    }
  }
  return rep;
}

inline std::vector<double> evolve_norm(const SampledMatrix& x, double g, const std::vector<double>& times) {
  return evolve_norm_report(x.x, g, times).values;
}

/// All eigenvalues of X by the dense complex eigensolver.
inline std::vector<cplx> empirical_spectrum(const SampledMatrix& x) {
  Eigen::ComplexEigenSolver<CMat> es(x.x, false);
  if (es.info() != Eigen::Success) fail(ErrorKind::SchurFailure, "empirical_spectrum: eigensolver did not converge");
  const CVec& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

struct McStudy {
  std::optional<CorrelationProfile> profile;  // general profile of size n, or
  std::optional<EllipticParams> elliptic;     // the elliptic ensemble
  double g = 0.0;
  std::vector<double> times;
  int n = 0;
  int replicas = 2;
  std::uint64_t base_seed = 0;
  bool keep_spectra = false;
  int threads = 0;
};

struct McResult {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> stderr_;
  std::vector<double> reference;
  std::vector<double> z;
  std::vector<std::vector<double>> per_replica;  // [replica][time]; empty row for failed replicas
  std::vector<std::vector<cplx>> spectra;        // [replica], when requested
  std::vector<int> failed_replicas;
  std::vector<std::string> warnings;
  int parlett_fallbacks = 0;
  std::string reference_kind;  // "bessel-series" or "contour-quadrature"
};

/// Deterministic reference for a study: the Bessel series for constant
/// profiles with 0 < |rho| < 1, the contour quadrature otherwise.
inline std::vector<double> study_reference(const McStudy& st, std::string* kind = nullptr, int threads = 1) {
  CorrelationProfile p;
  cplx rho;
  bool constant;
  if (st.elliptic) {
    rho = st.elliptic->rho;
    constant = true;
  } else {
    p = *st.profile;
    constant = is_constant_profile(p, &rho);
  }
  if (constant && std::abs(rho) > 0.0) {
    if (kind) *kind = "bessel-series";
    std::vector<double> out;
    for (double t : st.times) out.push_back(decay_series(rho, st.g, t).value);
    return out;
  }
  if (st.elliptic) p = constant_profiles(st.n, rho);
  if (kind) *kind = "contour-quadrature";
  DecayConfig cfg;
  cfg.threads = threads;
  return decay_curve(p, st.g, st.times, cfg).deterministic;
}

inline void check_study(const McStudy& st) {
  if (st.profile.has_value() == st.elliptic.has_value())
    fail(ErrorKind::InvalidArgument, "McStudy: exactly one of profile or elliptic must be given");
  if (st.replicas < 2) fail(ErrorKind::InvalidArgument, "McStudy: replicas must be at least 2");
  if (!(st.g > 0.0)) fail(ErrorKind::InvalidArgument, "McStudy: g must be positive");
  if (st.times.empty()) fail(ErrorKind::InvalidArgument, "McStudy: times must be nonempty");
  if (!std::is_sorted(st.times.begin(), st.times.end()) || st.times.front() < 0.0)
    fail(ErrorKind::InvalidArgument, "McStudy: times must be nonnegative and sorted ascending");
  if (st.elliptic) {
    if (st.n < 1 || st.elliptic->n != st.n) fail(ErrorKind::InvalidArgument, "McStudy: n must match the elliptic parameters");
    if (!(std::abs(st.elliptic->rho) < 1.0)) fail(ErrorKind::InvalidArgument, "McStudy: theory requires |rho| < 1");
  } else {
    check_structure(*st.profile);
    if (st.profile->n() != st.n) fail(ErrorKind::InvalidArgument, "McStudy: n must match the profile size");
    if (!(st.profile->rho_bound < 1.0)) fail(ErrorKind::InvalidArgument, "McStudy: theory requires rho_bound < 1");
  }
}

/// Samples `replicas` independent matrices with split seeds, evolves each and
/// reports mean, standard error and z-scores against the deterministic limit.
inline McResult run_study(const McStudy& st) {
  check_study(st);
  const int threads = resolve_threads(st.threads);
  McResult res;
  res.times = st.times;
  const std::size_t m = st.times.size();
  const auto r = static_cast<std::size_t>(st.replicas);
  res.per_replica.assign(r, {});
  if (st.keep_spectra) res.spectra.assign(r, {});
  std::vector<int> fallback(r, 0);
  std::vector<std::string> errors(r);

  parallel_for(r, threads, [&](std::size_t k) {
    try {
      const std::uint64_t seed = derive_seed(st.base_seed, k);
      const SampledMatrix x = st.elliptic ? sample_elliptic(*st.elliptic, seed) : sample_elliptic_type(*st.profile, seed);
      const EvolveReport rep = evolve_norm_report(x.x, st.g, st.times);
      fallback[k] = rep.parlett_used ? 0 : 1;
      if (st.keep_spectra) res.spectra[k] = empirical_spectrum(x);
      res.per_replica[k] = rep.values;
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });

  // Deterministic reduction in replica order.
  std::vector<double> sum(m, 0.0), sum2(m, 0.0);
  int ok = 0;
  for (std::size_t k = 0; k < r; ++k) {
    if (res.per_replica[k].empty()) {
      res.failed_replicas.push_back(static_cast<int>(k));
      res.warnings.push_back("replica " + std::to_string(k) + " failed: " + errors[k]);
      continue;
    }
    ++ok;
    res.parlett_fallbacks += fallback[k];
    for (std::size_t j = 0; j < m; ++j) sum[j] += res.per_replica[k][j];
  }
  if (ok < 2) fail(ErrorKind::NoConvergence, "run_study: fewer than two replicas succeeded");
  res.mean.resize(m);
  res.stderr_.resize(m);
  for (std::size_t j = 0; j < m; ++j) res.mean[j] = sum[j] / ok;
  for (std::size_t k = 0; k < r; ++k)
    if (!res.per_replica[k].empty())
      for (std::size_t j = 0; j < m; ++j) sum2[j] += std::pow(res.per_replica[k][j] - res.mean[j], 2);
  for (std::size_t j = 0; j < m; ++j) res.stderr_[j] = std::sqrt(sum2[j] / (ok - 1) / ok);

  res.reference = study_reference(st, &res.reference_kind, threads);
  res.z.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double diff = res.mean[j] - res.reference[j];
    res.z[j] = res.stderr_[j] > 0.0 ? diff / res.stderr_[j] : (std::abs(diff) <= 1e-12 ? 0.0 : std::copysign(INFINITY, diff));
  }
  return res;
}

}  // namespace ellspec
