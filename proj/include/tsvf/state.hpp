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
#include <utility>

#include "tsvf/layout.hpp"

namespace tsvf {

/// Dense ket on a SubsystemLayout.
///
/// The amplitude at global index g belongs to the basis vector whose
/// per-subsystem digits are layout().digits(g) (first subsystem most
/// significant). States must be finite with strictly positive norm.
class PureState {
 public:
  PureState(SubsystemLayout layout, Vector amplitudes)
      : layout_(std::move(layout)), amps_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amps_.size()) != layout_.dimension()) {
      throw std::invalid_argument("amplitude count does not match layout dimension");
    }
    if (!all_finite(amps_)) {
      throw std::invalid_argument("state amplitudes must be finite");
    }
    if (amps_.norm() == 0.0) {
      throw std::invalid_argument("state vector must have nonzero norm");
    }
  }

  const SubsystemLayout& layout() const { return layout_; }
  const Vector& amplitudes() const { return amps_; }
  std::size_t dimension() const { return layout_.dimension(); }

  double norm() const { return amps_.norm(); }

  bool is_normalized(double tolerance = tol::state_norm) const {
    return std::abs(norm() - 1.0) <= tolerance;
  }

  PureState normalized() const {
    return PureState(layout_, amps_ / amps_.norm());
  }

  static PureState basis_state(const SubsystemLayout& layout, std::size_t global) {
    if (global >= layout.dimension()) {
      throw std::invalid_argument("basis index out of range");
    }
    Vector v = Vector::Zero(static_cast<Eigen::Index>(layout.dimension()));
    v[static_cast<Eigen::Index>(global)] = Complex(1.0, 0.0);
    return PureState(layout, std::move(v));
  }

 private:
  SubsystemLayout layout_;
  Vector amps_;
};

/// <bra|ket>, conjugate-linear in the first argument.
inline Complex inner_product(const PureState& bra, const PureState& ket) {
  if (bra.layout() != ket.layout()) {
    throw std::invalid_argument("inner product requires matching layouts");
  }
  return bra.amplitudes().dot(ket.amplitudes());
}

/// Kronecker product of states; the first argument's subsystems come first
/// (and therefore vary slowest).
inline PureState tensor_product(const PureState& a, const PureState& b) {
  SubsystemLayout joined = a.layout().concat(b.layout());
  const Vector& va = a.amplitudes();
  const Vector& vb = b.amplitudes();
  Vector out(va.size() * vb.size());
  for (Eigen::Index i = 0; i < va.size(); ++i) {
    out.segment(i * vb.size(), vb.size()) = va[i] * vb;
  }
  return PureState(std::move(joined), std::move(out));
}

}  // namespace tsvf
