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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tsvf/common.hpp"
#include "tsvf/layout.hpp"
#include "tsvf/operator.hpp"
#include "tsvf/rules.hpp"
#include "tsvf/state.hpp"
#include "tsvf/twostate.hpp"

namespace tsvf {

// ---------------------------------------------------------------------------
// Pointer basis
// ---------------------------------------------------------------------------

/// Orthonormal basis of a single "pointer" subsystem, split into the ready
/// state (pre-measurement) and one record state per possible reading. The
/// states must together form a complete orthonormal basis of the subsystem,
/// which makes every controlled operation built from them unitary by
/// construction.
class PointerBasis {
 public:
  PointerBasis(std::string label, Vector ready, std::vector<Vector> outcomes)
      : layout_(SubsystemLayout({{label, static_cast<std::size_t>(ready.size())}})),
        ready_(std::move(ready)),
        outcomes_(std::move(outcomes)) {
    const Eigen::Index d = ready_.size();
    if (static_cast<Eigen::Index>(outcomes_.size()) + 1 != d) {
      throw std::invalid_argument(
          "pointer basis must consist of a ready state plus exactly dim-1 "
          "record states");
    }
    Matrix cols(d, d);
    cols.col(0) = ready_;
    for (std::size_t k = 0; k < outcomes_.size(); ++k) {
      if (outcomes_[k].size() != d) {
        throw std::invalid_argument("pointer record state has wrong dimension");
      }
      cols.col(static_cast<Eigen::Index>(k) + 1) = outcomes_[k];
    }
    Matrix gram = cols.adjoint() * cols;
    gram -= Matrix::Identity(d, d);
    if (max_abs(gram) > tol::pointer_basis) {
      throw std::invalid_argument(
          "pointer states must form an orthonormal basis");
    }
  }

  /// Ready state plus K computational records on a (1+K)-dimensional pointer.
  static PointerBasis computational(const std::string& label,
                                    std::size_t outcome_count) {
    const Eigen::Index d = static_cast<Eigen::Index>(outcome_count) + 1;
    Vector ready = Vector::Zero(d);
    ready(0) = 1.0;
    std::vector<Vector> outs;
    for (std::size_t k = 0; k < outcome_count; ++k) {
      Vector v = Vector::Zero(d);
      v(static_cast<Eigen::Index>(k) + 1) = 1.0;
      outs.push_back(std::move(v));
    }
    return PointerBasis(label, std::move(ready), std::move(outs));
  }

  const std::string& label() const { return layout_.at(0).label; }
  const SubsystemLayout& layout() const { return layout_; }
  std::size_t dim() const { return layout_.dimension(); }
  std::size_t outcome_count() const { return outcomes_.size(); }

  PureState ready_state() const { return PureState(layout_, ready_); }
  PureState outcome_state(std::size_t k) const {
    return PureState(layout_, outcomes_.at(k));
  }

  OperatorMatrix ready_projector() const {
    return OperatorMatrix(layout_, ready_ * ready_.adjoint(),
                          {.hermitian = true});
  }
  OperatorMatrix outcome_projector(std::size_t k) const {
    const Vector& o = outcomes_.at(k);
    return OperatorMatrix(layout_, o * o.adjoint(), {.hermitian = true});
  }

 private:
  SubsystemLayout layout_;
  Vector ready_;
  std::vector<Vector> outcomes_;
};

namespace detail {

/// 2x2 unitary mapping the single-qubit state `from` onto `to` (and the
/// orthogonal complement of `from` onto the orthogonal complement of `to`).
inline Eigen::Matrix2cd qubit_map_unitary(const Eigen::Vector2cd& from,
                                          const Eigen::Vector2cd& to) {
  auto perp = [](const Eigen::Vector2cd& v) {
    return Eigen::Vector2cd(-std::conj(v(1)), std::conj(v(0)));
  };
  return to * from.adjoint() + perp(to) * perp(from).adjoint();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Environment register
// ---------------------------------------------------------------------------

/// Bank of qubits that amplifies a pointer reading into a many-body record.
/// Each reading k has a product-state encoding; the blank register sits in the
/// all-|0> ready encoding. Distinct records overlap by at most epsilon_orth
/// in magnitude (0 by default, i.e. exactly orthogonal records), and every
/// record is exactly orthogonal to the ready encoding.
class EnvironmentRegister {
 public:
  /// Exactly orthogonal records: reading k is stored as the bit pattern of
  /// k+1 across the qubits (first label carries the most significant bit).
  static EnvironmentRegister computational(std::vector<std::string> labels,
                                           std::size_t outcome_count) {
    const std::size_t m = labels.size();
    if (m == 0) throw std::invalid_argument("environment register needs qubits");
    if (outcome_count == 0) {
      throw std::invalid_argument("environment register needs at least one record");
    }
    if (m >= 64 || outcome_count + 1 > (std::size_t{1} << m)) {
      throw std::invalid_argument(
          "environment register too small for the requested number of records");
    }
    std::vector<std::vector<Eigen::Vector2cd>> targets(outcome_count);
    for (std::size_t k = 0; k < outcome_count; ++k) {
      targets[k] = pattern_targets(k + 1, m);
    }
    return EnvironmentRegister(std::move(labels), 0.0, std::move(targets));
  }

  /// Two records with overlap epsilon in [0,1), both exactly orthogonal to
  /// the ready encoding. The overlap lives on the first qubit; the remaining
  /// qubits are flipped to |1> so that both records stay orthogonal to ready.
  static EnvironmentRegister overlapping(std::vector<std::string> labels,
                                         double epsilon) {
    if (!(epsilon >= 0.0) || epsilon >= 1.0) {
      throw std::invalid_argument("record overlap must lie in [0, 1)");
    }
    if (epsilon == 0.0) return computational(std::move(labels), 2);
    const std::size_t m = labels.size();
    if (m < 2) {
      throw std::invalid_argument(
          "overlapping records need at least two qubits to stay orthogonal "
          "to the ready encoding");
    }
    const double zeta = 0.5 * std::asin(epsilon);
    Eigen::Vector2cd u0(std::cos(zeta), std::sin(zeta));
    Eigen::Vector2cd u1(std::sin(zeta), std::cos(zeta));
    const Eigen::Vector2cd one(0.0, 1.0);
    std::vector<std::vector<Eigen::Vector2cd>> targets(2);
    targets[0].assign(m, one);
    targets[1].assign(m, one);
    targets[0][0] = u0;
    targets[1][0] = u1;
    return EnvironmentRegister(std::move(labels), epsilon, std::move(targets));
  }

  const SubsystemLayout& layout() const { return layout_; }
  std::size_t qubit_count() const { return layout_.count(); }
  std::size_t outcome_count() const { return targets_.size(); }
  double epsilon_orth() const { return eps_; }

  PureState ready_encoding() const {
    return PureState::basis_state(layout_, 0);
  }

  PureState outcome_encoding(std::size_t k) const {
    return product_state(targets_.at(k));
  }

  /// Record state reserved for the image of a reversed coupling; exactly
  /// orthogonal to the ready encoding and to every reading's record.
  PureState orthogonal_record_encoding() const {
    return product_state(orthogonal_targets());
  }

  /// <enc_j | enc_k> as a product of per-qubit overlaps.
  Complex record_overlap(std::size_t j, std::size_t k) const {
    const auto& a = targets_.at(j);
    const auto& b = targets_.at(k);
    Complex out(1.0, 0.0);
    for (std::size_t q = 0; q < a.size(); ++q) out *= a[q].dot(b[q]);
    return out;
  }

  /// Product unitary taking the ready encoding to record k.
  OperatorMatrix write_record_unitary(std::size_t k) const {
    return per_qubit_unitary(blank_targets(), targets_.at(k));
  }

  /// Product unitary taking record k back to the ready encoding.
  OperatorMatrix erase_record_unitary(std::size_t k) const {
    return write_record_unitary(k).adjoint();
  }

  /// Product unitary taking record k to the reserved orthogonal record.
  OperatorMatrix shift_record_unitary(std::size_t k) const {
    return per_qubit_unitary(targets_.at(k), orthogonal_targets());
  }

 private:
  EnvironmentRegister(std::vector<std::string> labels, double eps,
                      std::vector<std::vector<Eigen::Vector2cd>> targets)
      : eps_(eps), targets_(std::move(targets)) {
    std::vector<Subsystem> subs;
    for (auto& l : labels) subs.push_back({std::move(l), 2});
    layout_ = SubsystemLayout(std::move(subs));
    for (const auto& t : targets_) {
      for (const auto& q : t) {
        if (std::abs(q.norm() - 1.0) > tol::state_norm) {
          throw std::invalid_argument("record qubit states must be normalized");
        }
      }
    }
    for (std::size_t j = 0; j < targets_.size(); ++j) {
      for (std::size_t k = j + 1; k < targets_.size(); ++k) {
        const double ov = std::abs(record_overlap(j, k));
        if (eps_ == 0.0 ? ov > tol::orthonormal : ov > eps_ + tol::orthonormal) {
          throw std::invalid_argument(
              "encoding collision: records " + std::to_string(j) + " and " +
              std::to_string(k) + " overlap beyond the configured bound");
        }
      }
      // Records must never be mistakable for a blank register.
      Complex ov(1.0, 0.0);
      for (const auto& q : targets_[j]) ov *= q(0);
      if (std::abs(ov) > tol::orthonormal) {
        throw std::invalid_argument(
            "encoding collision: record " + std::to_string(j) +
            " overlaps the ready encoding");
      }
    }
  }

  static std::vector<Eigen::Vector2cd> pattern_targets(std::size_t value,
                                                       std::size_t m) {
    std::vector<Eigen::Vector2cd> t(m);
    for (std::size_t q = 0; q < m; ++q) {
      const std::size_t bit = (value >> (m - 1 - q)) & 1u;
      t[q] = bit ? Eigen::Vector2cd(0.0, 1.0) : Eigen::Vector2cd(1.0, 0.0);
    }
    return t;
  }

  std::vector<Eigen::Vector2cd> blank_targets() const {
    return std::vector<Eigen::Vector2cd>(qubit_count(),
                                         Eigen::Vector2cd(1.0, 0.0));
  }

  std::vector<Eigen::Vector2cd> orthogonal_targets() const {
    // |1...1 0>: orthogonal to ready on the leading qubits and to every
    // record on the last one (patterns 1..K never equal 2^m - 2 because the
    // constructor verifies the overlap numerically below).
    std::vector<Eigen::Vector2cd> t(qubit_count(), Eigen::Vector2cd(0.0, 1.0));
    t.back() = Eigen::Vector2cd(1.0, 0.0);
    for (std::size_t k = 0; k < targets_.size(); ++k) {
      Complex ov(1.0, 0.0);
      for (std::size_t q = 0; q < t.size(); ++q) ov *= t[q].dot(targets_[k][q]);
      if (std::abs(ov) > tol::orthonormal) {
        throw std::invalid_argument(
            "no free record state remains for the reversed-coupling image");
      }
    }
    return t;
  }

  PureState product_state(const std::vector<Eigen::Vector2cd>& t) const {
    Vector amps = Vector::Ones(1);
    for (const auto& q : t) {
      Vector next(amps.size() * 2);
      for (Eigen::Index i = 0; i < amps.size(); ++i) {
        next(2 * i) = amps(i) * q(0);
        next(2 * i + 1) = amps(i) * q(1);
      }
      amps = std::move(next);
    }
    return PureState(layout_, std::move(amps));
  }

  OperatorMatrix per_qubit_unitary(
      const std::vector<Eigen::Vector2cd>& from,
      const std::vector<Eigen::Vector2cd>& to) const {
    Matrix u = Matrix::Ones(1, 1);
    for (std::size_t q = 0; q < from.size(); ++q) {
      Eigen::Matrix2cd g = detail::qubit_map_unitary(from[q], to[q]);
      // u ⊗ g: earlier qubits stay the slower-varying factors.
      Matrix next(u.rows() * 2, u.cols() * 2);
      for (Eigen::Index i = 0; i < u.rows(); ++i) {
        for (Eigen::Index j = 0; j < u.cols(); ++j) {
          next.block(i * 2, j * 2, 2, 2) = u(i, j) * g;
        }
      }
      u = std::move(next);
    }
    return OperatorMatrix(layout_, std::move(u), {.unitary = true});
  }

  SubsystemLayout layout_;
  double eps_ = 0.0;
  std::vector<std::vector<Eigen::Vector2cd>> targets_;
};

// ---------------------------------------------------------------------------
// Coupling and decoherence unitaries
// ---------------------------------------------------------------------------

/// Unitary coupling a measured basis of `system_label` to the pointer: when
/// the system sits in basis state k, the pointer's ready state and record
/// state k are exchanged (all other pointer states are left alone). The
/// operator is Hermitian, unitary and its own inverse; running it backwards
/// on a recorded pointer maps the matching system branch to ready and parks
/// every non-matching branch on the recorded state itself, which therefore
/// doubles as the orthogonal image of the reversed interaction.
inline OperatorMatrix coupling_unitary(const SubsystemLayout& full,
                                       const std::string& system_label,
                                       const Matrix& system_basis,
                                       const PointerBasis& pointer) {
  const std::size_t sys_dim = full.at(full.position(system_label)).dim;
  if (system_basis.rows() != static_cast<Eigen::Index>(sys_dim) ||
      system_basis.cols() != static_cast<Eigen::Index>(sys_dim)) {
    throw std::invalid_argument("measured basis must be square on the system");
  }
  Matrix gram = system_basis.adjoint() * system_basis;
  gram -= Matrix::Identity(system_basis.rows(), system_basis.cols());
  if (max_abs(gram) > tol::orthonormal) {
    throw std::invalid_argument("measured basis is not orthonormal");
  }
  if (pointer.outcome_count() != sys_dim) {
    throw std::invalid_argument(
        "pointer must provide one record state per measured basis state");
  }

  SubsystemLayout sub =
      SubsystemLayout({{system_label, sys_dim}}).concat(pointer.layout());
  const Eigen::Index p = static_cast<Eigen::Index>(pointer.dim());
  const Vector r = pointer.ready_state().amplitudes();
  Matrix v = Matrix::Zero(sub.dimension(), sub.dimension());
  for (std::size_t k = 0; k < sys_dim; ++k) {
    const Vector b = system_basis.col(static_cast<Eigen::Index>(k));
    const Vector o = pointer.outcome_state(k).amplitudes();
    Matrix swap = Matrix::Identity(p, p) - r * r.adjoint() - o * o.adjoint() +
                  r * o.adjoint() + o * r.adjoint();
    Matrix proj = b * b.adjoint();
    for (Eigen::Index i = 0; i < proj.rows(); ++i) {
      for (Eigen::Index j = 0; j < proj.cols(); ++j) {
        v.block(i * p, j * p, p, p) += proj(i, j) * swap;
      }
    }
  }
  return embed_operator(
      OperatorMatrix(std::move(sub), std::move(v),
                     {.hermitian = true, .unitary = true}),
      full);
}

/// Controlled record-writing on (pointer, register): each pointer record k
/// writes record k into the register, while the ready pointer leaves the
/// register alone.
inline OperatorMatrix decoherence_unitary(const SubsystemLayout& full,
                                          const PointerBasis& pointer,
                                          const EnvironmentRegister& env) {
  if (pointer.outcome_count() != env.outcome_count()) {
    throw std::invalid_argument(
        "pointer and environment register disagree on the number of records");
  }
  SubsystemLayout sub = pointer.layout().concat(env.layout());
  const Eigen::Index e = static_cast<Eigen::Index>(env.layout().dimension());
  Matrix w = Matrix::Zero(sub.dimension(), sub.dimension());
  const Vector r = pointer.ready_state().amplitudes();
  auto place = [&](const Vector& pstate, const Matrix& g) {
    Matrix proj = pstate * pstate.adjoint();
    for (Eigen::Index i = 0; i < proj.rows(); ++i) {
      for (Eigen::Index j = 0; j < proj.cols(); ++j) {
        w.block(i * e, j * e, e, e) += proj(i, j) * g;
      }
    }
  };
  place(r, Matrix::Identity(e, e));
  for (std::size_t k = 0; k < env.outcome_count(); ++k) {
    place(pointer.outcome_state(k).amplitudes(),
          env.write_record_unitary(k).matrix());
  }
  return embed_operator(
      OperatorMatrix(std::move(sub), std::move(w), {.unitary = true}), full);
}

// ---------------------------------------------------------------------------
// Forward measurement steps
// ---------------------------------------------------------------------------

namespace detail {

// Weight of a state inside a (possibly empty) projector range; works on raw
// vectors because the projection of a valid state may legitimately vanish.
inline double projected_weight(const PureState& s, const OperatorMatrix& sub_proj) {
  return (embed_operator(sub_proj, s.layout()).matrix() * s.amplitudes())
      .squaredNorm();
}

}  // namespace detail

/// Entangle the measured basis of `system_label` with the pointer. The
/// pointer must start in its ready state.
inline PureState von_neumann_couple(const PureState& state,
                                    const std::string& system_label,
                                    const Matrix& system_basis,
                                    const PointerBasis& pointer) {
  OperatorMatrix v =
      coupling_unitary(state.layout(), system_label, system_basis, pointer);
  const double total = state.amplitudes().squaredNorm();
  const double ready = detail::projected_weight(state, pointer.ready_projector());
  if (std::abs(ready - total) > tol::pointer_basis * std::max(1.0, total)) {
    throw std::invalid_argument("pointer is not in its ready state before coupling");
  }
  return v.apply(state);
}

/// Amplify the pointer reading into the environment register. The register
/// must start blank (ready encoding).
inline PureState decohere_forward(const PureState& state,
                                  const PointerBasis& pointer,
                                  const EnvironmentRegister& env) {
  OperatorMatrix w = decoherence_unitary(state.layout(), pointer, env);
  const double total = state.amplitudes().squaredNorm();
  const PureState blank = env.ready_encoding();
  OperatorMatrix blank_proj(
      env.layout(),
      Matrix(blank.amplitudes() * blank.amplitudes().adjoint()),
      {.hermitian = true});
  const double ready = detail::projected_weight(state, blank_proj);
  if (std::abs(ready - total) > tol::pointer_basis * std::max(1.0, total)) {
    throw std::invalid_argument(
        "environment register is not in its ready encoding");
  }
  return w.apply(state);
}

// ---------------------------------------------------------------------------
// Backward steps
// ---------------------------------------------------------------------------

/// Coefficients of a backward-evolving state after the einselection step that
/// follows a reversed coupling: the weight that flowed onto the ready pointer
/// (the reading-consistent branch) and onto the orthogonal image.
struct BackwardRecord {
  std::string pointer_label;
  std::size_t record = 0;
  double ready_coefficient = 0.0;
  double orthogonal_coefficient = 0.0;
};

struct BackwardDecohereResult {
  PureState state;
  BackwardRecord record;
};

/// Backward einselection: given a backward state that has already passed the
/// reversed coupling (pointer spread over ready / recorded states, register
/// still holding the original record), rewrite the register coherently with
/// the pointer: the ready pointer erases the record, the recorded pointer
/// shifts it to the reserved orthogonal record. Detects which record the
/// register holds and fails if it is ambiguous.
inline BackwardDecohereResult backward_record_reencode(
    const PureState& state, const PointerBasis& pointer,
    const EnvironmentRegister& env) {
  const double total = state.amplitudes().squaredNorm();
  std::size_t best = 0;
  double best_w = -1.0;
  for (std::size_t k = 0; k < env.outcome_count(); ++k) {
    const Vector e = env.outcome_encoding(k).amplitudes();
    OperatorMatrix proj(env.layout(), Matrix(e * e.adjoint()),
                        {.hermitian = true});
    const double w = detail::projected_weight(state, proj);
    if (w > best_w) {
      best_w = w;
      best = k;
    }
  }
  if (best_w < (1.0 - 1e-9) * total) {
    throw std::invalid_argument(
        "backward record is ambiguous: environment register does not hold a "
        "single reading");
  }

  // The pointer-side image of the reversed coupling must be orthogonal to
  // ready, and so must the register-side orthogonal record; both are checked
  // rather than assumed.
  const Complex pr = inner_product(pointer.ready_state(),
                                   pointer.outcome_state(best));
  const Complex er = inner_product(env.ready_encoding(),
                                   env.orthogonal_record_encoding());
  if (std::abs(pr) > tol::pointer_basis || std::abs(er) > tol::pointer_basis) {
    throw std::invalid_argument(
        "reversed-coupling image is not orthogonal to the ready state");
  }

  SubsystemLayout sub = pointer.layout().concat(env.layout());
  const Eigen::Index e = static_cast<Eigen::Index>(env.layout().dimension());
  Matrix w = Matrix::Zero(sub.dimension(), sub.dimension());
  auto place = [&](const Vector& pstate, const Matrix& g) {
    Matrix proj = pstate * pstate.adjoint();
    for (Eigen::Index i = 0; i < proj.rows(); ++i) {
      for (Eigen::Index j = 0; j < proj.cols(); ++j) {
        w.block(i * e, j * e, e, e) += proj(i, j) * g;
      }
    }
  };
  place(pointer.ready_state().amplitudes(),
        env.erase_record_unitary(best).matrix());
  for (std::size_t k = 0; k < pointer.outcome_count(); ++k) {
    place(pointer.outcome_state(k).amplitudes(),
          k == best ? env.shift_record_unitary(best).matrix()
                    : Matrix(Matrix::Identity(e, e)));
  }
  PureState out = embed_operator(OperatorMatrix(std::move(sub), std::move(w),
                                                {.unitary = true}),
                                 state.layout())
                      .apply(state);

  const double norm2 = out.amplitudes().squaredNorm();
  BackwardRecord rec;
  rec.pointer_label = pointer.label();
  rec.record = best;
  rec.ready_coefficient = std::sqrt(
      detail::projected_weight(out, pointer.ready_projector()) / norm2);
  rec.orthogonal_coefficient = std::sqrt(
      detail::projected_weight(out, pointer.outcome_projector(best)) / norm2);
  return {std::move(out), std::move(rec)};
}

/// Take a backward-evolving state sitting just after (in ordinary time) a
/// completed measurement back through it: reverse the coupling, then apply
/// backward einselection to the register. The recorded reading is detected
/// from the pointer, never assumed.
inline BackwardDecohereResult backward_decohere(const PureState& state,
                                                const std::string& system_label,
                                                const Matrix& system_basis,
                                                const PointerBasis& pointer,
                                                const EnvironmentRegister& env) {
  const double total = state.amplitudes().squaredNorm();
  std::size_t best = 0;
  double best_w = -1.0;
  for (std::size_t k = 0; k < pointer.outcome_count(); ++k) {
    const double w = detail::projected_weight(state, pointer.outcome_projector(k));
    if (w > best_w) {
      best_w = w;
      best = k;
    }
  }
  if (best_w < (1.0 - 1e-9) * total) {
    throw std::invalid_argument(
        "backward record is ambiguous: pointer does not hold a single reading");
  }
  PureState reversed =
      coupling_unitary(state.layout(), system_label, system_basis, pointer)
          .adjoint()
          .apply(state);
  BackwardDecohereResult res = backward_record_reencode(reversed, pointer, env);
  if (res.record.record != best) {
    throw std::invalid_argument(
        "pointer and environment register disagree on the recorded reading");
  }
  return res;
}

// ---------------------------------------------------------------------------
// Final boundary selection
// ---------------------------------------------------------------------------

/// Forward-branch bookkeeping for a final boundary: the forward state is
/// split by pointer reading; the boundary selects the reading it overlaps,
/// and the selected branch's forward weight is reported alongside the weight
/// left on everything else.
struct BranchSelection {
  std::size_t selected = 0;
  std::vector<double> branch_weights;
  double selected_weight = 0.0;
  double residual_weight = 0.0;
};

struct FinalBoundaryResult {
  TwoState two_state;
  BranchSelection selection;
};

inline FinalBoundaryResult apply_final_boundary(const PureState& forward,
                                                const PureState& final_state,
                                                const PointerBasis& pointer) {
  const double fnorm2 = forward.amplitudes().squaredNorm();
  BranchSelection sel;
  double best_cross = -1.0;
  for (std::size_t k = 0; k < pointer.outcome_count(); ++k) {
    const Vector branch =
        embed_operator(pointer.outcome_projector(k), forward.layout())
            .matrix() *
        forward.amplitudes();
    sel.branch_weights.push_back(branch.squaredNorm() / fnorm2);
    const double cross = std::norm(final_state.amplitudes().dot(branch));
    if (cross > best_cross) {
      best_cross = cross;
      sel.selected = k;
    }
  }
  sel.selected_weight = sel.branch_weights[sel.selected];
  sel.residual_weight = std::max(0.0, 1.0 - sel.selected_weight);
  try {
    TwoState ts(forward, final_state);
    return {std::move(ts), std::move(sel)};
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("inconsistent final boundary: ") +
                                e.what());
  }
}

// ---------------------------------------------------------------------------
// Scenario schedule
// ---------------------------------------------------------------------------

struct CoupleStep {
  double time = 0.0;
  std::string system_label;
  Matrix system_basis;
  PointerBasis pointer;
};

struct DecohereStep {
  double time = 0.0;
  PointerBasis pointer;
  EnvironmentRegister env;
};

/// Backward-only einselection event. Placed (in ordinary time) just before
/// the coupling it undoes: a backward-evolving state reaches it after passing
/// back through the coupling, which is exactly when the register record must
/// be rewritten coherently with the ready/orthogonal pointer split.
struct BackwardDecohereStep {
  double time = 0.0;
  PointerBasis pointer;
  EnvironmentRegister env;
};

struct FreeEvolutionStep {
  double time = 0.0;
  OperatorMatrix unitary;
};

using ScheduleStep = std::variant<CoupleStep, DecohereStep, BackwardDecohereStep,
                                  FreeEvolutionStep>;

inline double step_time(const ScheduleStep& s) {
  return std::visit([](const auto& x) { return x.time; }, s);
}

/// A fixed pair of boundary conditions plus the ordered steps between them.
/// Forward-evolving states see couplings, forward decoherence and free
/// evolution; backward-evolving states see the adjoint couplings and free
/// segments plus the backward einselection steps. Decoherence is one-way on
/// each side: a record written toward the future is never unwritten by the
/// backward pass, and vice versa, while each side's own evolution remains
/// exactly unitary.
struct MeasurementScenario {
  SubsystemLayout layout;
  PureState initial_forward;
  PureState final_backward;
  double final_time = 0.0;
  std::vector<ScheduleStep> schedule;
};

inline PureState forward_state_at(const MeasurementScenario& sc, double t);

inline void validate_scenario(const MeasurementScenario& sc) {
  if (sc.initial_forward.layout() != sc.layout ||
      sc.final_backward.layout() != sc.layout) {
    throw std::invalid_argument("scenario states must live on the scenario layout");
  }
  for (std::size_t i = 0; i + 1 < sc.schedule.size(); ++i) {
    if (!(step_time(sc.schedule[i]) < step_time(sc.schedule[i + 1]))) {
      throw std::invalid_argument("schedule times must be strictly increasing");
    }
  }
  if (!sc.schedule.empty() &&
      !(step_time(sc.schedule.back()) <= sc.final_time)) {
    throw std::invalid_argument("final boundary must not precede the schedule");
  }
  const PureState at_end = forward_state_at(sc, sc.final_time);
  const double scale = at_end.norm() * sc.final_backward.norm();
  if (std::abs(inner_product(sc.final_backward, at_end)) <=
      tol::overlap_floor * scale) {
    throw std::invalid_argument(
        "inconsistent final boundary: orthogonal to the evolved forward state");
  }
}

namespace detail {

inline void check_norm_drift(const PureState& s, double reference) {
  if (std::abs(s.norm() - reference) > tol::unitary * std::max(1.0, reference)) {
    throw std::runtime_error("scenario step failed to preserve the state norm");
  }
}

}  // namespace detail

/// Forward-evolving state at ordinary time t (all steps with time <= t
/// applied, backward-only steps skipped).
inline PureState forward_state_at(const MeasurementScenario& sc, double t) {
  PureState psi = sc.initial_forward;
  const double n0 = psi.norm();
  for (const auto& step : sc.schedule) {
    if (step_time(step) > t) break;
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, CoupleStep>) {
            psi = coupling_unitary(sc.layout, s.system_label, s.system_basis,
                                   s.pointer)
                      .apply(psi);
          } else if constexpr (std::is_same_v<T, DecohereStep>) {
            psi = decoherence_unitary(sc.layout, s.pointer, s.env).apply(psi);
          } else if constexpr (std::is_same_v<T, FreeEvolutionStep>) {
            if (!s.unitary.unitary_claimed()) {
              throw std::invalid_argument(
                  "free evolution steps must carry unitary operators");
            }
            psi = embed_operator(s.unitary, sc.layout).apply(psi);
          }
          // Backward einselection steps do not touch the forward state.
        },
        step);
    detail::check_norm_drift(psi, n0);
  }
  return psi;
}

struct BackwardEvolution {
  PureState state;
  std::vector<BackwardRecord> records;
};

/// Backward-evolving state at ordinary time t: starting from the final
/// boundary, later steps are undone in reverse order. Couplings and free
/// segments are reversed exactly; forward decoherence events are records
/// already written toward the future and are passed through untouched;
/// backward einselection steps rewrite the register against the
/// ready/orthogonal pointer split.
inline BackwardEvolution backward_state_at(const MeasurementScenario& sc,
                                           double t) {
  BackwardEvolution out{sc.final_backward, {}};
  const double n0 = out.state.norm();
  for (auto it = sc.schedule.rbegin(); it != sc.schedule.rend(); ++it) {
    if (step_time(*it) <= t) break;
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, CoupleStep>) {
            out.state = coupling_unitary(sc.layout, s.system_label,
                                         s.system_basis, s.pointer)
                            .adjoint()
                            .apply(out.state);
          } else if constexpr (std::is_same_v<T, FreeEvolutionStep>) {
            out.state =
                embed_operator(s.unitary, sc.layout).adjoint().apply(out.state);
          } else if constexpr (std::is_same_v<T, BackwardDecohereStep>) {
            BackwardDecohereResult r =
                backward_record_reencode(out.state, s.pointer, s.env);
            out.state = std::move(r.state);
            out.records.push_back(std::move(r.record));
          }
          // Forward decoherence: skipped on the backward pass.
        },
        *it);
    detail::check_norm_drift(out.state, n0);
  }
  return out;
}

inline TwoState two_state_at(const MeasurementScenario& sc, double t) {
  return TwoState(forward_state_at(sc, t), backward_state_at(sc, t).state);
}

// ---------------------------------------------------------------------------
// Window reports
// ---------------------------------------------------------------------------

/// Which side of the reduced two-state operator a branch selection applies
/// to: the forward (ket) factor or the backward (bra) factor.
enum class SelectedSide { forward_ket, backward_bra };

/// Reduced two-state operator over a named time window together with the
/// Frobenius weight it carries on the selected branch.
struct WindowReport {
  std::string label;
  OperatorMatrix reduced;
  double selected_weight = 0.0;
  double residual_weight = 0.0;
};

inline WindowReport make_window_report(std::string label,
                                       OperatorMatrix reduced,
                                       const PureState& selected,
                                       SelectedSide side) {
  if (selected.layout() != reduced.layout()) {
    throw std::invalid_argument("selected branch must live on the reduced layout");
  }
  const Vector& v = selected.amplitudes();
  const Matrix& m = reduced.matrix();
  const double denom = m.squaredNorm();
  double num = 0.0;
  if (side == SelectedSide::forward_ket) {
    num = (v.adjoint() * m).squaredNorm() / v.squaredNorm();
  } else {
    num = (m * v).squaredNorm() / v.squaredNorm();
  }
  const double selected_weight = denom > 0.0 ? num / denom : 0.0;
  return WindowReport{std::move(label), std::move(reduced), selected_weight,
                      std::max(0.0, 1.0 - selected_weight)};
}

/// Full output of a scenario run: the final-boundary branch bookkeeping, the
/// reduced two-state over each analysis window, and every backward
/// einselection event that occurred.
struct BranchReport {
  BranchSelection selection;
  std::vector<WindowReport> windows;
  std::vector<BackwardRecord> backward_records;
};

// ---------------------------------------------------------------------------
// Canned scenario: one measurement
// ---------------------------------------------------------------------------

/// One von Neumann measurement of a qubit in the computational basis, with a
/// 3-state pointer (ready + two records) amplified into a 3-qubit register,
/// followed by a final boundary that asserts one particular reading.
struct SingleMeasurementSetup {
  Complex upper_amplitude{M_SQRT1_2, 0.0};
  Complex lower_amplitude{M_SQRT1_2, 0.0};
  /// Particle factor of the final boundary.
  Eigen::Vector2cd final_particle{Complex(1.0, 0.0), Complex(0.0, 0.0)};
  /// Which reading the boundary asserts (0 or 1).
  std::size_t boundary_record = 0;
  /// Overlap magnitude between the two register records (0 = orthogonal).
  double epsilon_orth = 0.0;
  /// Optional replacement for the boundary's register factor (e.g. a mixture
  /// of both records); empty means "the record's own encoding".
  Vector backward_environment;
  double coupling_time = 1.0;
  double decoherence_delay = 0.5;
  double boundary_time = 3.0;
};

struct SingleMeasurementModel {
  MeasurementScenario scenario;
  PointerBasis pointer;
  EnvironmentRegister env;
  Matrix measured_basis;
};

inline SingleMeasurementModel make_single_measurement(
    const SingleMeasurementSetup& s) {
  if (s.boundary_record > 1) {
    throw std::invalid_argument("boundary record must be 0 or 1");
  }
  if (!(s.decoherence_delay > 0.0) ||
      !(s.boundary_time > s.coupling_time + s.decoherence_delay)) {
    throw std::invalid_argument("schedule times must be strictly increasing");
  }
  PointerBasis pointer = PointerBasis::computational("pointer", 2);
  EnvironmentRegister env =
      EnvironmentRegister::overlapping({"env0", "env1", "env2"}, s.epsilon_orth);

  SubsystemLayout particle({{"particle", 2}});
  Vector psi(2);
  psi << s.upper_amplitude, s.lower_amplitude;
  PureState initial = tensor_product(
      tensor_product(PureState(particle, psi), pointer.ready_state()),
      env.ready_encoding());

  PureState env_final =
      s.backward_environment.size() == 0
          ? env.outcome_encoding(s.boundary_record)
          : PureState(env.layout(), s.backward_environment);
  PureState final_state = tensor_product(
      tensor_product(PureState(particle, Vector(s.final_particle)),
                     pointer.outcome_state(s.boundary_record)),
      env_final);

  std::vector<ScheduleStep> schedule;
  schedule.push_back(CoupleStep{s.coupling_time, "particle",
                                Matrix(Matrix::Identity(2, 2)), pointer});
  schedule.push_back(
      DecohereStep{s.coupling_time + s.decoherence_delay, pointer, env});
  MeasurementScenario sc{initial.layout(), std::move(initial),
                         std::move(final_state), s.boundary_time,
                         std::move(schedule)};
  validate_scenario(sc);
  return {std::move(sc), std::move(pointer), std::move(env),
          Matrix(Matrix::Identity(2, 2))};
}

inline BranchReport run_single_measurement(const SingleMeasurementSetup& s) {
  SingleMeasurementModel m = make_single_measurement(s);
  const MeasurementScenario& sc = m.scenario;

  BranchReport report;
  report.selection =
      apply_final_boundary(forward_state_at(sc, sc.final_time),
                           sc.final_backward, m.pointer)
          .selection;

  const double t_window =
      0.5 * (s.coupling_time + s.decoherence_delay + s.boundary_time);
  TwoStateDensity density = make_two_state_density(two_state_at(sc, t_window));
  OperatorMatrix reduced = reduce_two_state(density, {"particle", "pointer"});

  PureState selected = tensor_product(
      PureState::basis_state(SubsystemLayout({{"particle", 2}}),
                             s.boundary_record),
      m.pointer.outcome_state(s.boundary_record));
  report.windows.push_back(make_window_report("between_decoherence_and_boundary",
                                              std::move(reduced), selected,
                                              SelectedSide::forward_ket));
  return report;
}

// ---------------------------------------------------------------------------
// Canned scenario: two measurements in different bases
// ---------------------------------------------------------------------------

/// Two consecutive spin measurements along different axes (first x, then y),
/// each with its own pointer and 3-qubit register, with a final boundary
/// asserting one reading for each. Exposes three analysis windows: after the
/// second measurement, between the two, and before the first.
struct SequentialMeasurementSetup {
  Complex up_amplitude{M_SQRT1_2, 0.0};
  Complex down_amplitude{M_SQRT1_2, 0.0};
  /// Particle factor of the final boundary; defaults to spin-up along x.
  Eigen::Vector2cd final_particle{Complex(M_SQRT1_2, 0.0),
                                  Complex(M_SQRT1_2, 0.0)};
  std::size_t first_record = 0;
  std::size_t second_record = 0;
  double first_coupling_time = 2.0;
  double second_coupling_time = 6.0;
  double interaction_duration = 1.0;
  double decoherence_delay = 0.5;
};

struct SequentialMeasurementModel {
  MeasurementScenario scenario;
  PointerBasis first_pointer;
  PointerBasis second_pointer;
  EnvironmentRegister first_env;
  EnvironmentRegister second_env;
  Matrix first_basis;
  Matrix second_basis;
};

inline Matrix spin_x_basis() {
  Matrix b(2, 2);
  b << Complex(M_SQRT1_2, 0.0), Complex(M_SQRT1_2, 0.0),
      Complex(M_SQRT1_2, 0.0), Complex(-M_SQRT1_2, 0.0);
  return b;
}

inline Matrix spin_y_basis() {
  Matrix b(2, 2);
  b << Complex(M_SQRT1_2, 0.0), Complex(M_SQRT1_2, 0.0),
      Complex(0.0, M_SQRT1_2), Complex(0.0, -M_SQRT1_2);
  return b;
}

inline SequentialMeasurementModel make_sequential_measurement(
    const SequentialMeasurementSetup& s) {
  if (s.first_record > 1 || s.second_record > 1) {
    throw std::invalid_argument("boundary records must be 0 or 1");
  }
  const double t1 = s.first_coupling_time;
  const double t2 = s.second_coupling_time;
  const double ti = s.interaction_duration;
  const double td = s.decoherence_delay;
  if (!(ti > 0.0) || !(td > 0.0) || !(t2 - t1 > ti + 2.0 * td)) {
    throw std::invalid_argument(
        "second measurement must start after the first finished decohering");
  }

  PointerBasis px = PointerBasis::computational("px", 2);
  PointerBasis py = PointerBasis::computational("py", 2);
  EnvironmentRegister ex =
      EnvironmentRegister::computational({"ex0", "ex1", "ex2"}, 2);
  EnvironmentRegister ey =
      EnvironmentRegister::computational({"ey0", "ey1", "ey2"}, 2);
  Matrix bx = spin_x_basis();
  Matrix by = spin_y_basis();

  SubsystemLayout particle({{"particle", 2}});
  Vector psi = s.up_amplitude * bx.col(0) + s.down_amplitude * bx.col(1);
  PureState initial = tensor_product(
      tensor_product(
          tensor_product(tensor_product(PureState(particle, psi),
                                        px.ready_state()),
                         py.ready_state()),
          ex.ready_encoding()),
      ey.ready_encoding());

  PureState final_state = tensor_product(
      tensor_product(
          tensor_product(
              tensor_product(PureState(particle, Vector(s.final_particle)),
                             px.outcome_state(s.first_record)),
              py.outcome_state(s.second_record)),
          ex.outcome_encoding(s.first_record)),
      ey.outcome_encoding(s.second_record));

  std::vector<ScheduleStep> schedule;
  schedule.push_back(BackwardDecohereStep{t1 - ti - td, px, ex});
  schedule.push_back(CoupleStep{t1, "particle", bx, px});
  schedule.push_back(DecohereStep{t1 + td, px, ex});
  schedule.push_back(BackwardDecohereStep{t2 - ti - td, py, ey});
  schedule.push_back(CoupleStep{t2, "particle", by, py});
  schedule.push_back(DecohereStep{t2 + td, py, ey});
  MeasurementScenario sc{initial.layout(), std::move(initial),
                         std::move(final_state), t2 + td, std::move(schedule)};
  validate_scenario(sc);
  return {std::move(sc), std::move(px), std::move(py), std::move(ex),
          std::move(ey), std::move(bx), std::move(by)};
}

inline BranchReport run_sequential_measurement(
    const SequentialMeasurementSetup& s) {
  SequentialMeasurementModel m = make_sequential_measurement(s);
  const MeasurementScenario& sc = m.scenario;
  const double t1 = s.first_coupling_time;
  const double t2 = s.second_coupling_time;
  const double ti = s.interaction_duration;
  const double td = s.decoherence_delay;
  SubsystemLayout particle({{"particle", 2}});

  BranchReport report;
  report.selection =
      apply_final_boundary(forward_state_at(sc, sc.final_time),
                           sc.final_backward, m.second_pointer)
          .selection;

  auto reduced_at = [&](double t, const std::vector<std::string>& keep) {
    return reduce_two_state(make_two_state_density(two_state_at(sc, t)), keep);
  };

  {
    PureState sel = tensor_product(
        tensor_product(
            PureState(particle, Vector(m.second_basis.col(
                                    static_cast<Eigen::Index>(s.second_record)))),
            m.first_pointer.outcome_state(s.first_record)),
        m.second_pointer.outcome_state(s.second_record));
    report.windows.push_back(make_window_report(
        "after_second_decoherence",
        reduced_at(sc.final_time, {"particle", "px", "py"}), sel,
        SelectedSide::forward_ket));
  }
  {
    PureState sel = tensor_product(
        tensor_product(
            PureState(particle, Vector(m.first_basis.col(
                                    static_cast<Eigen::Index>(s.first_record)))),
            m.first_pointer.outcome_state(s.first_record)),
        m.second_pointer.ready_state());
    report.windows.push_back(make_window_report(
        "between_measurements",
        reduced_at(0.5 * (t1 + td + t2 - ti - td), {"particle", "px", "py"}),
        sel, SelectedSide::forward_ket));
  }
  const double t_early = t1 - ti - td - 1.0;
  {
    PureState sel(particle,
                  Vector(m.first_basis.col(
                      static_cast<Eigen::Index>(s.first_record))));
    report.windows.push_back(
        make_window_report("before_first_coupling",
                           reduced_at(t_early, {"particle"}), sel,
                           SelectedSide::backward_bra));
  }
  report.backward_records = backward_state_at(sc, t_early).records;
  return report;
}

// ---------------------------------------------------------------------------
// Instantaneous signaling under a known final boundary
// ---------------------------------------------------------------------------

/// Outcome bookkeeping for the two-party demonstration: with both boundary
/// states of an entangled pair fixed and known, a local unitary on one side
/// steers the other side's outcome deterministically; averaging over a
/// complete family of final boundaries restores the ordinary 50/50 marginal.
struct SignalingResult {
  bool alice_acted = false;
  double up_probability = 0.0;
  double down_probability = 0.0;
  std::string outcome;
  double marginal_up = 0.0;
  double marginal_down = 0.0;
};

inline SignalingResult run_signaling_demo(bool alice_acts) {
  SubsystemLayout pair({{"alice", 2}, {"bob", 2}});
  SubsystemLayout bob({{"bob", 2}});

  Vector joint = Vector::Zero(4);
  joint(0) = M_SQRT1_2;  // up,up
  joint(3) = M_SQRT1_2;  // down,down
  PureState state(pair, joint);
  if (alice_acts) {
    Matrix sx(2, 2);
    sx << 0, 1, 1, 0;
    state = embed_operator(OperatorMatrix(SubsystemLayout({{"alice", 2}}), sx,
                                          {.hermitian = true, .unitary = true}),
                           pair)
                .apply(state);
  }

  Matrix sz(2, 2);
  sz << 1, 0, 0, -1;
  OperatorMatrix bob_sz(bob, sz, {.hermitian = true});
  Vector bob_final(2);
  bob_final << M_SQRT1_2, M_SQRT1_2;

  // Bob's effective forward state, conditioned on Alice's factor of the
  // final boundary (spin-up at her site).
  auto conditional = [&](std::size_t a) {
    Vector v(2);
    for (std::size_t j = 0; j < 2; ++j) {
      v(static_cast<Eigen::Index>(j)) =
          state.amplitudes()(static_cast<Eigen::Index>(2 * a + j));
    }
    return v;
  };

  Vector bob_fwd = conditional(0);
  OutcomeDistribution dist =
      abl_probability(PureState(bob, bob_fwd / bob_fwd.norm()),
                      PureState(bob, bob_final), bob_sz);
  SignalingResult res;
  res.alice_acted = alice_acts;
  // Outcomes are listed in ascending eigenvalue order: index 0 is spin-down
  // (eigenvalue -1), index 1 is spin-up (+1).
  res.down_probability = dist.probability(0);
  res.up_probability = dist.probability(1);
  res.outcome = res.up_probability >= res.down_probability ? "up" : "down";

  // Forget the final boundary: weight each of Alice's readings by its Born
  // probability and average Bob's boundary-free distributions.
  std::vector<PureState> bob_basis = {PureState::basis_state(bob, 0),
                                      PureState::basis_state(bob, 1)};
  for (std::size_t a = 0; a < 2; ++a) {
    Vector v = conditional(a);
    const double w = v.squaredNorm();
    if (w <= 0.0) continue;
    OutcomeDistribution marg = marginalize_final(
        PureState(bob, Vector(v / v.norm())), bob_sz, bob_basis);
    res.marginal_down += w * marg.probability(0);
    res.marginal_up += w * marg.probability(1);
  }
  return res;
}

}  // namespace tsvf
