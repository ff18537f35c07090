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

#include <cstdint>
#include <utility>
#include <vector>

#include "tsvf/operator.hpp"
#include "tsvf/prng.hpp"
#include "tsvf/state.hpp"

namespace tsvf {

/// Eigen-decomposition of a Hermitian observable with a non-degenerate
/// spectrum. Eigenvalues ascend; column k of `eigenvectors` belongs to
/// eigenvalue k. Eigenvalues closer than the degeneracy gap are rejected,
/// since outcome probabilities conditioned on both boundaries are only
/// defined for non-degenerate observables here.
struct Spectrum {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;
};

inline Spectrum observable_spectrum(const OperatorMatrix& observable) {
  const Matrix& m = observable.matrix();
  const double scale = max_abs(m);
  if (scale > 0.0 && max_abs(Matrix(m - m.adjoint())) > tol::hermitian * scale) {
    throw std::invalid_argument("observable must be Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("observable eigendecomposition failed");
  }
  Spectrum s;
  s.eigenvalues.assign(es.eigenvalues().data(),
                       es.eigenvalues().data() + es.eigenvalues().size());
  for (std::size_t k = 1; k < s.eigenvalues.size(); ++k) {
    if (s.eigenvalues[k] - s.eigenvalues[k - 1] <= tol::degenerate_gap) {
      throw std::invalid_argument("observable spectrum is degenerate (gap <= 1e-9)");
    }
  }
  s.eigenvectors = es.eigenvectors();
  return s;
}

struct Outcome {
  double eigenvalue = 0.0;
  double probability = 0.0;
};

/// Outcome table of a projective measurement, ascending in eigenvalue.
class OutcomeDistribution {
 public:
  OutcomeDistribution(OperatorMatrix observable, std::vector<Outcome> outcomes)
      : observable_(std::move(observable)), outcomes_(std::move(outcomes)) {
    double sum = 0.0;
    for (const auto& o : outcomes_) {
      if (o.probability < 0.0) {
        throw std::invalid_argument("outcome probabilities must be nonnegative");
      }
      sum += o.probability;
    }
    if (std::abs(sum - 1.0) > tol::distribution) {
      throw std::invalid_argument("outcome probabilities must sum to 1");
    }
    for (std::size_t k = 1; k < outcomes_.size(); ++k) {
      if (outcomes_[k].eigenvalue - outcomes_[k - 1].eigenvalue <=
          tol::degenerate_gap) {
        throw std::invalid_argument("outcome eigenvalues must be distinct ascending");
      }
    }
  }

  const OperatorMatrix& observable() const { return observable_; }
  const std::vector<Outcome>& outcomes() const { return outcomes_; }
  std::size_t size() const { return outcomes_.size(); }
  double probability(std::size_t k) const { return outcomes_.at(k).probability; }
  double eigenvalue(std::size_t k) const { return outcomes_.at(k).eigenvalue; }

 private:
  OperatorMatrix observable_;
  std::vector<Outcome> outcomes_;
};

namespace detail {

inline OutcomeDistribution finish_distribution(const OperatorMatrix& observable,
                                               const Spectrum& s,
                                               std::vector<double> raw) {
  double total = 0.0;
  for (double w : raw) total += w;
  std::vector<Outcome> outcomes(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    double p = raw[k] / total;
    if (p < tol::prob_clamp) p = 0.0;
    outcomes[k] = {s.eigenvalues[k], p};
  }
  return OutcomeDistribution(observable, std::move(outcomes));
}

}  // namespace detail

/// Probability of each outcome of an intermediate ideal measurement given
/// both boundary states, with no self-evolution between the boundaries and
/// the measurement:
///
///   Pr(a_k) = |<final|a_k>|^2 |<a_k|initial>|^2
///             / sum_j |<final|a_j>|^2 |<a_j|initial>|^2
///
/// Manifestly symmetric under swapping the boundary states, and invariant
/// under rescaling either one. Throws if the denominator vanishes (the two
/// boundaries admit no intermediate outcome at all).
inline OutcomeDistribution abl_probability(const PureState& initial,
                                           const PureState& final_state,
                                           const OperatorMatrix& observable) {
  if (initial.layout() != observable.layout() ||
      final_state.layout() != observable.layout()) {
    throw std::invalid_argument("boundary states and observable layouts differ");
  }
  Spectrum s = observable_spectrum(observable);
  const Vector& vi = initial.amplitudes();
  const Vector& vf = final_state.amplitudes();
  std::vector<double> raw(s.eigenvalues.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const Vector a = s.eigenvectors.col(static_cast<Eigen::Index>(k));
    raw[k] = std::norm(vf.dot(a)) * std::norm(a.dot(vi));
  }
  double total = 0.0;
  for (double w : raw) total += w;
  const double scale = vi.squaredNorm() * vf.squaredNorm();
  if (!(total > tol::overlap_floor * tol::overlap_floor * scale)) {
    throw std::invalid_argument(
        "boundary pair assigns zero weight to every outcome (vanishing denominator)");
  }
  return detail::finish_distribution(observable, s, std::move(raw));
}

/// Pre-selected-only outcome probabilities Pr(a_k) = |<a_k|initial>|^2
/// (the input is normalized first).
inline OutcomeDistribution born_probability(const PureState& initial,
                                            const OperatorMatrix& observable) {
  if (initial.layout() != observable.layout()) {
    throw std::invalid_argument("state and observable layouts differ");
  }
  Spectrum s = observable_spectrum(observable);
  const Vector vi = initial.amplitudes() / initial.norm();
  std::vector<double> raw(s.eigenvalues.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    raw[k] = std::norm(s.eigenvectors.col(static_cast<Eigen::Index>(k)).dot(vi));
  }
  return detail::finish_distribution(observable, s, std::move(raw));
}

/// Forget the final boundary: average the conditioned distributions over a
/// complete orthonormal family of final states, each weighted by the
/// probability of actually ending up there. Reproduces the pre-selected-only
/// rule.
inline OutcomeDistribution marginalize_final(const PureState& initial,
                                             const OperatorMatrix& observable,
                                             const std::vector<PureState>& final_basis) {
  if (initial.layout() != observable.layout()) {
    throw std::invalid_argument("state and observable layouts differ");
  }
  const std::size_t dim = observable.layout().dimension();
  if (final_basis.size() != dim) {
    throw std::invalid_argument("final basis must contain exactly dim states");
  }
  for (std::size_t i = 0; i < dim; ++i) {
    if (final_basis[i].layout() != observable.layout()) {
      throw std::invalid_argument("final basis state layout differs");
    }
    for (std::size_t j = 0; j <= i; ++j) {
      const Complex g =
          inner_product(final_basis[i], final_basis[j]) - (i == j ? 1.0 : 0.0);
      if (std::abs(g) > tol::basis_complete) {
        throw std::invalid_argument("final basis is not orthonormal/complete");
      }
    }
  }
  Spectrum s = observable_spectrum(observable);
  const Vector vi = initial.amplitudes() / initial.norm();
  std::vector<double> raw(s.eigenvalues.size(), 0.0);
  for (const auto& f : final_basis) {
    const Vector& vf = f.amplitudes();
    // The weight of this final state is the ABL denominator itself, so
    // weighted conditioned probabilities reduce to summed numerators.
    for (std::size_t k = 0; k < raw.size(); ++k) {
      const Vector a = s.eigenvectors.col(static_cast<Eigen::Index>(k));
      raw[k] += std::norm(vf.dot(a)) * std::norm(a.dot(vi));
    }
  }
  return detail::finish_distribution(observable, s, std::move(raw));
}

/// Result of drawing an ensemble of final states from the observable's
/// eigenbasis with pre-selected-only weights.
struct EnsembleSample {
  std::uint64_t seed = 0;
  std::uint64_t draws = 0;
  std::vector<std::uint64_t> counts;  // aligned with ascending eigenvalues
};

/// Draw `draws` final states i.i.d. from the eigenbasis of `observable`
/// with weights |<a_k|initial>|^2, by inverse CDF over the outcome list in
/// ascending eigenvalue order. Draw i depends only on (seed, i); see
/// tsvf::prng for the stream derivation.
inline EnsembleSample sample_final_states(const PureState& initial,
                                          const OperatorMatrix& observable,
                                          std::uint64_t draws, std::uint64_t seed) {
  OutcomeDistribution dist = born_probability(initial, observable);
  std::vector<double> cdf(dist.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    acc += dist.probability(k);
    cdf[k] = acc;
  }
  cdf.back() = 1.0;
  EnsembleSample sample;
  sample.seed = seed;
  sample.draws = draws;
  sample.counts.assign(dist.size(), 0);
  for (std::uint64_t i = 0; i < draws; ++i) {
    const double u = prng::uniform(seed, i);
    std::size_t k = 0;
    while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
    ++sample.counts[k];
  }
  return sample;
}

}  // namespace tsvf
