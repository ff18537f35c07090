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

#include <random>

#include "tsvf/evolution.hpp"
#include "tsvf/operator.hpp"
#include "tsvf/state.hpp"

namespace tsvf_test {

using tsvf::Complex;
using tsvf::Matrix;
using tsvf::Vector;

inline const Complex I{0.0, 1.0};

inline Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline Matrix pauli_y() {
  Matrix m(2, 2);
  m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  return m;
}

inline Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

// Spin states in the z computational basis.
inline Vector up_z() { return Vector{{Complex(1), Complex(0)}}; }
inline Vector down_z() { return Vector{{Complex(0), Complex(1)}}; }
inline Vector up_x() { return Vector{{Complex(M_SQRT1_2), Complex(M_SQRT1_2)}}; }
inline Vector down_x() { return Vector{{Complex(M_SQRT1_2), Complex(-M_SQRT1_2)}}; }
inline Vector up_y() { return Vector{{Complex(M_SQRT1_2), Complex(0, M_SQRT1_2)}}; }
inline Vector down_y() { return Vector{{Complex(M_SQRT1_2), Complex(0, -M_SQRT1_2)}}; }

inline tsvf::SubsystemLayout qubit(const std::string& label) {
  return tsvf::SubsystemLayout({{label, 2}});
}

inline Vector random_state_vector(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Complex(g(rng), g(rng));
  v /= v.norm();
  return v;
}

inline Matrix random_hermitian(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = Complex(g(rng), g(rng));
  }
  return Matrix(0.5 * (m + m.adjoint()));
}

inline Matrix random_unitary(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = Complex(g(rng), g(rng));
  }
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ();
  return q;
}

inline double max_entry_diff(const Matrix& a, const Matrix& b) {
  return tsvf::max_abs(Matrix(a - b));
}

// Independent small-step oracle for exp(-i H t): product of 4th-order Taylor
// steps, deliberately avoiding the eigendecomposition route the library uses.
inline Matrix taylor_step_propagator(const Matrix& h, double duration, int steps) {
  const Eigen::Index d = h.rows();
  const double dt = duration / steps;
  Matrix a = Complex(0.0, -dt) * h;
  Matrix step = Matrix::Identity(d, d) + a + a * a / 2.0 + a * a * a / 6.0 +
                a * a * a * a / 24.0;
  Matrix u = Matrix::Identity(d, d);
  for (int i = 0; i < steps; ++i) u = step * u;
  return u;
}

// Scale-invariant comparison of operators that are only meaningful up to a
// global factor: fit A ~ f*B in the Frobenius inner product, then compare.
inline double scaled_match_residual(const Matrix& a, const Matrix& b) {
  Complex num(0.0, 0.0);
  double den = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      num += std::conj(b(r, c)) * a(r, c);
      den += std::norm(b(r, c));
    }
  }
  if (den == 0.0) return tsvf::max_abs(a);
  const Complex f = num / den;
  return tsvf::max_abs(Matrix(a - f * b));
}

}  // namespace tsvf_test
