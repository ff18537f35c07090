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

#include <string>
#include <utility>
#include <vector>

#include "tsvf/state.hpp"

namespace tsvf {

/// Structural claims about an operator, verified at construction.
struct OperatorFlags {
  bool hermitian = false;
  bool unitary = false;
};

/// Dense square operator on a SubsystemLayout (row-major basis indexing
/// matching PureState's global index convention).
class OperatorMatrix {
 public:
  OperatorMatrix(SubsystemLayout layout, Matrix matrix, OperatorFlags flags = {})
      : layout_(std::move(layout)), mat_(std::move(matrix)), flags_(flags) {
    const auto d = static_cast<Eigen::Index>(layout_.dimension());
    if (mat_.rows() != d || mat_.cols() != d) {
      throw std::invalid_argument("operator shape does not match layout dimension");
    }
    if (!all_finite(mat_)) {
      throw std::invalid_argument("operator entries must be finite");
    }
    if (flags_.hermitian) {
      const double scale = max_abs(mat_);
      if (scale > 0.0 &&
          max_abs(Matrix(mat_ - mat_.adjoint())) > tol::hermitian * scale) {
        throw std::invalid_argument("operator claimed hermitian is not");
      }
    }
    if (flags_.unitary) {
      Matrix gram = mat_.adjoint() * mat_;
      gram -= Matrix::Identity(d, d);
      if (max_abs(gram) > tol::unitary) {
        throw std::invalid_argument("operator claimed unitary is not");
      }
    }
  }

  static OperatorMatrix identity(const SubsystemLayout& layout) {
    const auto d = static_cast<Eigen::Index>(layout.dimension());
    return OperatorMatrix(layout, Matrix::Identity(d, d),
                          {.hermitian = true, .unitary = true});
  }

  /// Wrap a matrix whose flags hold by construction (products, embeddings,
  /// or blockwise assemblies of already-validated operators), skipping the
  /// claim checks. The unitarity check costs O(dim^3), which is prohibitive
  /// on large composite spaces; shape and finiteness are still enforced.
  static OperatorMatrix by_construction(SubsystemLayout layout, Matrix matrix,
                                        OperatorFlags flags) {
    OperatorMatrix op(std::move(layout), std::move(matrix));
    op.flags_ = flags;
    return op;
  }

  const SubsystemLayout& layout() const { return layout_; }
  const Matrix& matrix() const { return mat_; }
  bool hermitian_claimed() const { return flags_.hermitian; }
  bool unitary_claimed() const { return flags_.unitary; }

  OperatorMatrix adjoint() const {
    return by_construction(layout_, mat_.adjoint(), flags_);
  }

  Complex trace() const { return mat_.trace(); }

  PureState apply(const PureState& s) const {
    if (s.layout() != layout_) {
      throw std::invalid_argument("operator and state layouts do not match");
    }
    return PureState(layout_, mat_ * s.amplitudes());
  }

 private:
  SubsystemLayout layout_;
  Matrix mat_;
  OperatorFlags flags_;
};

inline OperatorMatrix tensor_product(const OperatorMatrix& a, const OperatorMatrix& b) {
  SubsystemLayout joined = a.layout().concat(b.layout());
  const Matrix& ma = a.matrix();
  const Matrix& mb = b.matrix();
  Matrix out(ma.rows() * mb.rows(), ma.cols() * mb.cols());
  for (Eigen::Index r = 0; r < ma.rows(); ++r) {
    for (Eigen::Index c = 0; c < ma.cols(); ++c) {
      out.block(r * mb.rows(), c * mb.cols(), mb.rows(), mb.cols()) = ma(r, c) * mb;
    }
  }
  return OperatorMatrix::by_construction(
      std::move(joined), std::move(out),
      {.hermitian = a.hermitian_claimed() && b.hermitian_claimed(),
       .unitary = a.unitary_claimed() && b.unitary_claimed()});
}

/// Lift an operator on a sub-layout to the full layout, acting as identity on
/// every unlisted subsystem. The operator's labels may appear in any order but
/// must exist in the target with identical dimensions.
inline OperatorMatrix embed_operator(const OperatorMatrix& op,
                                     const SubsystemLayout& target) {
  const SubsystemLayout& sub = op.layout();
  std::vector<std::size_t> pos(sub.count());
  for (std::size_t i = 0; i < sub.count(); ++i) {
    pos[i] = target.position(sub.at(i).label);
    if (target.at(pos[i]).dim != sub.at(i).dim) {
      throw std::invalid_argument("dimension mismatch for subsystem '" +
                                  sub.at(i).label + "' while embedding");
    }
  }

  const std::size_t d = target.dimension();
  const std::size_t dsub = sub.dimension();
  const std::size_t drest = d / dsub;

  // Strides for the "rest" (identity-acted) subsystems, in target order.
  std::vector<std::size_t> rest_stride;
  std::vector<std::size_t> rest_dim;
  for (std::size_t i = 0; i < target.count(); ++i) {
    if (std::find(pos.begin(), pos.end(), i) == pos.end()) {
      rest_stride.push_back(target.stride(i));
      rest_dim.push_back(target.at(i).dim);
    }
  }

  // Global offset contributed by a sub-layout basis index.
  auto sub_offset = [&](std::size_t sub_index) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < sub.count(); ++i) {
      off += sub.digit(sub_index, i) * target.stride(pos[i]);
    }
    return off;
  };
  std::vector<std::size_t> sub_off(dsub);
  for (std::size_t k = 0; k < dsub; ++k) sub_off[k] = sub_offset(k);

  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  const Matrix& m = op.matrix();
  for (std::size_t rest = 0; rest < drest; ++rest) {
    std::size_t roff = 0;
    std::size_t tmp = rest;
    for (std::size_t i = rest_dim.size(); i-- > 0;) {
      roff += (tmp % rest_dim[i]) * rest_stride[i];
      tmp /= rest_dim[i];
    }
    for (std::size_t r = 0; r < dsub; ++r) {
      for (std::size_t c = 0; c < dsub; ++c) {
        out(static_cast<Eigen::Index>(sub_off[r] + roff),
            static_cast<Eigen::Index>(sub_off[c] + roff)) = m(
            static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
    }
  }
  return OperatorMatrix::by_construction(target, std::move(out),
                                         {.hermitian = op.hermitian_claimed(),
                                          .unitary = op.unitary_claimed()});
}

/// Partial trace onto the kept subsystems (result keeps the original layout
/// order regardless of the order of `keep`). Works for arbitrary, not
/// necessarily Hermitian, operators.
inline OperatorMatrix partial_trace(const OperatorMatrix& rho,
                                    const std::vector<std::string>& keep) {
  const SubsystemLayout& layout = rho.layout();
  SubsystemLayout kept = layout.restricted(keep);

  std::vector<std::size_t> keep_pos;
  std::vector<std::size_t> trace_pos;
  for (std::size_t i = 0; i < layout.count(); ++i) {
    if (kept.has(layout.at(i).label)) {
      keep_pos.push_back(i);
    } else {
      trace_pos.push_back(i);
    }
  }

  const std::size_t dkeep = kept.dimension();
  std::size_t dtrace = 1;
  for (auto p : trace_pos) dtrace *= layout.at(p).dim;

  auto offset_of = [&](const std::vector<std::size_t>& positions, std::size_t packed) {
    std::size_t off = 0;
    for (std::size_t i = positions.size(); i-- > 0;) {
      const std::size_t dim = layout.at(positions[i]).dim;
      off += (packed % dim) * layout.stride(positions[i]);
      packed /= dim;
    }
    return off;
  };

  std::vector<std::size_t> keep_off(dkeep);
  for (std::size_t k = 0; k < dkeep; ++k) keep_off[k] = offset_of(keep_pos, k);
  std::vector<std::size_t> trace_off(dtrace);
  for (std::size_t t = 0; t < dtrace; ++t) trace_off[t] = offset_of(trace_pos, t);

  const Matrix& m = rho.matrix();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dkeep),
                            static_cast<Eigen::Index>(dkeep));
  for (std::size_t r = 0; r < dkeep; ++r) {
    for (std::size_t c = 0; c < dkeep; ++c) {
      Complex sum(0.0, 0.0);
      for (std::size_t t = 0; t < dtrace; ++t) {
        sum += m(static_cast<Eigen::Index>(keep_off[r] + trace_off[t]),
                 static_cast<Eigen::Index>(keep_off[c] + trace_off[t]));
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = sum;
    }
  }
  return OperatorMatrix(std::move(kept), std::move(out));
}

}  // namespace tsvf
