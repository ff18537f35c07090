// Copyright 2026 The tsvf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tsvf {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

/// Numerical thresholds used by validation and the scenario checks.
/// All comparisons that involve matrix entries are taken relative to the
/// largest entry magnitude unless stated otherwise.
namespace tol {
inline constexpr double hermitian = 1e-12;       ///< |M - M^dagger| (relative)
inline constexpr double unitary = 1e-10;         ///< |M^dagger M - I| (absolute)
inline constexpr double orthonormal = 1e-12;     ///< Gram residual (relative)
inline constexpr double basis_complete = 1e-10;  ///< completeness of a supplied basis
inline constexpr double pointer_basis = 1e-10;   ///< pointer state orthonormality
inline constexpr double state_norm = 1e-12;      ///< "normalized" flag check
inline constexpr double overlap_floor = 1e-12;   ///< two-state overlap (relative)
inline constexpr double degenerate_gap = 1e-9;   ///< eigenvalue separation
inline constexpr double prob_clamp = 1e-15;      ///< probabilities below this become 0
inline constexpr double distribution = 1e-10;    ///< sum-to-one and scenario residuals
}  // namespace tol

inline double max_abs(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

inline double max_abs(const Vector& v) {
  if (v.size() == 0) return 0.0;
  return v.cwiseAbs().maxCoeff();
}

inline bool all_finite(const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
  }
  return true;
}

inline bool all_finite(const Matrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (!std::isfinite(m(r, c).real()) || !std::isfinite(m(r, c).imag())) return false;
    }
  }
  return true;
}

}  // namespace tsvf
