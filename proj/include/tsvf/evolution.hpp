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

#include <utility>
#include <vector>

#include "tsvf/operator.hpp"

namespace tsvf {

/// One constant-generator stretch of a schedule. Units use hbar = 1.
struct HamiltonianSegment {
  double duration = 0.0;
  OperatorMatrix generator;
};

/// Piecewise-constant Hamiltonian: segments in chronological order.
class PiecewiseHamiltonian {
 public:
  explicit PiecewiseHamiltonian(std::vector<HamiltonianSegment> segments)
      : segments_(std::move(segments)) {
    if (segments_.empty()) {
      throw std::invalid_argument("piecewise Hamiltonian needs at least one segment");
    }
    for (const auto& seg : segments_) {
      if (!(seg.duration > 0.0) || !std::isfinite(seg.duration)) {
        throw std::invalid_argument("segment durations must be positive and finite");
      }
      if (seg.generator.layout() != segments_.front().generator.layout()) {
        throw std::invalid_argument("all segments must share one layout");
      }
      const Matrix& h = seg.generator.matrix();
      const double scale = max_abs(h);
      if (scale > 0.0 && max_abs(Matrix(h - h.adjoint())) > tol::hermitian * scale) {
        throw std::invalid_argument("segment generator is not Hermitian");
      }
    }
  }

  const SubsystemLayout& layout() const {
    return segments_.front().generator.layout();
  }
  const std::vector<HamiltonianSegment>& segments() const { return segments_; }

  double total_duration() const {
    double t = 0.0;
    for (const auto& seg : segments_) t += seg.duration;
    return t;
  }

 private:
  std::vector<HamiltonianSegment> segments_;
};

/// exp(-i H t) for Hermitian H, via eigendecomposition.
inline OperatorMatrix hermitian_propagator(const OperatorMatrix& h, double duration) {
  const Matrix& m = h.matrix();
  const double scale = max_abs(m);
  if (scale > 0.0 && max_abs(Matrix(m - m.adjoint())) > tol::hermitian * scale) {
    throw std::invalid_argument("propagator generator is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed for propagator generator");
  }
  const auto& evals = es.eigenvalues();
  Vector phases(evals.size());
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    phases[i] = std::exp(Complex(0.0, -evals[i] * duration));
  }
  Matrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  return OperatorMatrix(h.layout(), std::move(u), {.unitary = true});
}

/// Time-ordered product of the per-segment propagators: later segments act on
/// the left, so the result maps a state at the start of the schedule to the
/// state at its end.
inline OperatorMatrix time_ordered_unitary(const PiecewiseHamiltonian& h) {
  const auto d = static_cast<Eigen::Index>(h.layout().dimension());
  Matrix u = Matrix::Identity(d, d);
  for (const auto& seg : h.segments()) {
    u = hermitian_propagator(seg.generator, seg.duration).matrix() * u;
  }
  return OperatorMatrix(h.layout(), std::move(u), {.unitary = true});
}

}  // namespace tsvf
