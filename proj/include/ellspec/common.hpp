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

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ellspec {

inline constexpr const char* kVersion = "1.0.0";

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

enum class ErrorKind {
  InvalidArgument,
  NonMember,
  SingularJacobian,
  NoConvergence,
  NearSingular,
  NotApplicable,
  BracketFailure,
  NotPrimitive,
  BranchAmbiguity,
  Overflow,
  SchurFailure,
  PoleContact,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonMember: return "NonMember";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NearSingular: return "NearSingular";
    case ErrorKind::NotApplicable: return "NotApplicable";
    case ErrorKind::BracketFailure: return "BracketFailure";
    case ErrorKind::NotPrimitive: return "NotPrimitive";
    case ErrorKind::BranchAmbiguity: return "BranchAmbiguity";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::SchurFailure: return "SchurFailure";
    case ErrorKind::PoleContact: return "PoleContact";
  }
  return "Unknown";
}

/// Failure of a numerical routine. `kind` identifies the failure mode so
/// callers (and the CLI exit-code mapping) can react to it.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed user input (bad profile file, bad flag values).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  if (kind == ErrorKind::InvalidArgument) throw InputError(what);
  throw NumericalError(kind, what);
}

/// Normalized average <v> = (1/N) sum_i v_i.
template <typename Derived>
auto avg(const Eigen::MatrixBase<Derived>& v) {
  return v.sum() / static_cast<double>(v.size());
}

/// Normalized inner product <u, v> = (1/N) sum_i conj(u_i) v_i.
template <typename A, typename B>
auto inner(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) {
  return u.dot(v) / static_cast<double>(u.size());
}

}  // namespace ellspec
