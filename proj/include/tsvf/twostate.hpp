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

#include "tsvf/evolution.hpp"
#include "tsvf/operator.hpp"
#include "tsvf/state.hpp"

namespace tsvf {

/// A forward-evolving ket |Psi> together with a backward-evolving bra <Phi|.
/// The bra is stored as a ket and conjugated on use, so both members evolve
/// by the same propagators.
class TwoState {
 public:
  TwoState(PureState forward, PureState backward)
      : forward_(std::move(forward)), backward_(std::move(backward)) {
    if (forward_.layout() != backward_.layout()) {
      throw std::invalid_argument("forward and backward layouts do not match");
    }
    const double scale = forward_.norm() * backward_.norm();
    if (std::abs(overlap()) <= tol::overlap_floor * scale) {
      throw std::invalid_argument(
          "backward and forward states are (numerically) orthogonal");
    }
  }

  const PureState& forward() const { return forward_; }
  const PureState& backward() const { return backward_; }
  const SubsystemLayout& layout() const { return forward_.layout(); }

  /// <Phi|Psi>.
  Complex overlap() const { return inner_product(backward_, forward_); }

 private:
  PureState forward_;
  PureState backward_;
};

/// Generally non-Hermitian rank-1 operator |Psi><Phi| / <Psi|Phi>.
/// With this normalization the trace is the pure phase
/// <Phi|Psi> / <Psi|Phi>, of unit magnitude.
struct TwoStateDensity {
  OperatorMatrix entries;
};

inline TwoStateDensity make_two_state_density(const TwoState& ts) {
  const Vector& f = ts.forward().amplitudes();
  const Vector& b = ts.backward().amplitudes();
  const Complex denom = f.dot(b);  // <Psi|Phi>, conjugate-linear in Psi
  Matrix m = (f * b.adjoint()) / denom;
  return TwoStateDensity{OperatorMatrix(ts.layout(), std::move(m))};
}

/// Transport a two-state across a piecewise-constant Hamiltonian window: the
/// forward ket by U and the stored backward ket by the same U (so the bra
/// picks up U^dagger on its right, leaving the overlap invariant).
inline TwoState evolve_two_state(const TwoState& ts, const PiecewiseHamiltonian& h) {
  if (h.layout() != ts.layout()) {
    throw std::invalid_argument("Hamiltonian layout does not match the two-state");
  }
  OperatorMatrix u = time_ordered_unitary(h);
  return TwoState(u.apply(ts.forward()), u.apply(ts.backward()));
}

/// Partial trace of the two-state density onto the kept subsystems.
inline OperatorMatrix reduce_two_state(const TwoStateDensity& d,
                                       const std::vector<std::string>& keep) {
  return partial_trace(d.entries, keep);
}

/// Weak value <Phi|A|Psi> / <Phi|Psi>.
inline Complex weak_value(const TwoState& ts, const OperatorMatrix& a) {
  if (a.layout() != ts.layout()) {
    throw std::invalid_argument("observable layout does not match the two-state");
  }
  const Vector& f = ts.forward().amplitudes();
  const Vector& b = ts.backward().amplitudes();
  return b.dot(a.matrix() * f) / b.dot(f);
}

}  // namespace tsvf
