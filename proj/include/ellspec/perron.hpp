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

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "ellspec/common.hpp"

namespace ellspec {

struct PowerIterationResult {
  double radius = 0.0;
  Vec vector;      // positive, unit Euclidean norm
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Power iteration for an entry-wise nonnegative matrix with Collatz-Wielandt
// stopping: min_i (Mv)_i/v_i <= r(M) <= max_i (Mv)_i/v_i for v > 0.
inline PowerIterationResult power_iteration(const Mat& m, double rel_tol, int max_iter) {
  const Eigen::Index n = m.rows();
  PowerIterationResult out;
  Vec v = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
  double shift = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    // Periodic (imprimitive) matrices oscillate; shifting by the identity
    // keeps the Perron vector and makes the dominant eigenvalue unique.
    if (it == max_iter / 4 && shift == 0.0) shift = std::max(1e-300, m.cwiseAbs().maxCoeff());
    Vec w = m * v + shift * v;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    bool positive = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(v[i] > 0.0)) {
        positive = false;
        break;
      }
      const double q = w[i] / v[i];
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    const double norm = w.norm();
    if (norm == 0.0) {
      out.radius = 0.0;
      out.vector = v;
      out.iterations = it;
      out.converged = true;
      return out;
    }
    v = w / norm;
    out.iterations = it;
    if (positive && hi - lo <= rel_tol * hi) {
      out.radius = 0.5 * (lo + hi) - shift;
      out.vector = v;
      out.converged = true;
      return out;
    }
  }
  out.vector = v;
  out.radius = (v.dot(m * v)) / v.squaredNorm();
  return out;
}

inline double dense_spectral_radius(const Mat& m) {
  Eigen::EigenSolver<Mat> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Spectral radius of an entry-wise nonnegative matrix by power iteration from
/// the all-ones vector, to relative accuracy `rel_tol`. Falls back to a dense
/// eigensolver when the iteration stalls (reducible or nearly periodic input).
inline double spectral_radius_nonneg(const Mat& m, double rel_tol = 1e-10) {
  if (m.rows() == 0) return 0.0;
  if (m.rows() == 1) return std::abs(m(0, 0));
  auto r = detail::power_iteration(m, rel_tol, 20000);
  if (r.converged) return r.radius;
  return detail::dense_spectral_radius(m);
}

struct PerronPair {
  Vec left;       // v_l > 0
  Vec right;      // v_r > 0
  double radius;  // Perron root
};

/// Left and right Perron-Frobenius vectors of a primitive nonnegative matrix,
/// scaled so that <v_l, v_r> = 1 in the normalized inner product.
///
/// If `primitivity_power` > 0 the matrix power m^L is additionally required to
/// be entry-wise positive.
inline PerronPair perron_pair(const Mat& m, int primitivity_power = 0, double rel_tol = 1e-12) {
  if (m.rows() != m.cols() || m.rows() == 0) fail(ErrorKind::InvalidArgument, "perron_pair: matrix must be square and nonempty");
  if ((m.array() < 0.0).any()) fail(ErrorKind::InvalidArgument, "perron_pair: matrix has negative entries");
  if (primitivity_power > 0) {
    Mat p = m;
    for (int k = 1; k < primitivity_power; ++k) p = p * m;
    if (!(p.array() > 0.0).all()) fail(ErrorKind::NotPrimitive, "m^L has zero entries");
  }
  auto r = detail::power_iteration(m, rel_tol, 200000);
  auto l = detail::power_iteration(m.transpose(), rel_tol, 200000);
  if (!r.converged || !l.converged) fail(ErrorKind::NotPrimitive, "power iteration did not converge");
  if (!(r.vector.array() > 0.0).all() || !(l.vector.array() > 0.0).all())
    fail(ErrorKind::NotPrimitive, "Perron vector is not strictly positive");
  PerronPair out;
  out.right = r.vector;
  out.left = l.vector;
  out.radius = r.radius;
  const double s = inner(out.left, out.right);
  out.left /= s;
  return out;
}

}  // namespace ellspec
