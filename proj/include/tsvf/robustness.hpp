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
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tsvf/common.hpp"

namespace tsvf {

// ---------------------------------------------------------------------------
// Product environment
// ---------------------------------------------------------------------------

/// Two competing product-state encodings of one macroscopic record, stored
/// analytically as per-particle qubit states (never as a 2^N vector). Each
/// particle j carries the state it holds under branch 1 and under branch 2;
/// full-encoding overlaps factorize over particles.
class ProductEnvironment {
 public:
  struct BranchEncodings {
    Eigen::Vector2cd first;
    Eigen::Vector2cd second;
  };

  explicit ProductEnvironment(std::vector<BranchEncodings> particles)
      : particles_(std::move(particles)) {
    if (particles_.empty()) {
      throw std::invalid_argument("environment needs at least one particle");
    }
    for (const BranchEncodings& p : particles_) {
      if (std::abs(p.first.norm() - 1.0) > tol::state_norm ||
          std::abs(p.second.norm() - 1.0) > tol::state_norm) {
        throw std::invalid_argument(
            "per-particle encodings must be normalized");
      }
    }
  }

  /// N particles that all record branch 1 as |0> and branch 2 as
  /// c|0> + sqrt(1-c^2)|1>, so every per-particle overlap equals c.
  static ProductEnvironment uniform(std::size_t particle_count,
                                    double overlap) {
    if (!(overlap >= 0.0) || overlap > 1.0) {
      throw std::invalid_argument("per-particle overlap must lie in [0, 1]");
    }
    BranchEncodings p;
    p.first = Eigen::Vector2cd(1.0, 0.0);
    p.second =
        Eigen::Vector2cd(overlap, std::sqrt(std::max(0.0, 1.0 - overlap * overlap)));
    return ProductEnvironment(
        std::vector<BranchEncodings>(particle_count, p));
  }

  std::size_t particle_count() const { return particles_.size(); }
  const BranchEncodings& particle(std::size_t j) const {
    return particles_.at(j);
  }

  /// <first_j | second_j> for one particle.
  Complex particle_overlap(std::size_t j) const {
    const BranchEncodings& p = particles_.at(j);
    return p.first.dot(p.second);
  }

 private:
  std::vector<BranchEncodings> particles_;
};

/// <branch-1 encoding | branch-2 encoding> of the full register: the product
/// of per-particle overlaps. May underflow for very large registers; the
/// ratio computations below work in log space instead.
inline Complex environment_overlap(const ProductEnvironment& env) {
  Complex out(1.0, 0.0);
  for (std::size_t j = 0; j < env.particle_count(); ++j) {
    out *= env.particle_overlap(j);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Partial collapse
// ---------------------------------------------------------------------------

/// One collapsed particle: which environment particle went definite, and the
/// single state it landed on. Both branch encodings of that particle are
/// projected onto the same target.
struct CollapseTarget {
  std::size_t particle = 0;
  Eigen::Vector2cd state;
};

/// The set of particles that have gone definite. The branch amplitudes the
/// collapse contributes are gamma_i^(j) = <target_j | branch_i state of j>;
/// branch 1 must keep a nonzero amplitude on every collapsed particle.
class CollapseRecord {
 public:
  explicit CollapseRecord(std::vector<CollapseTarget> targets)
      : targets_(std::move(targets)) {
    for (std::size_t a = 0; a < targets_.size(); ++a) {
      if (std::abs(targets_[a].state.norm() - 1.0) > tol::state_norm) {
        throw std::invalid_argument("collapse targets must be normalized");
      }
      for (std::size_t b = a + 1; b < targets_.size(); ++b) {
        if (targets_[a].particle == targets_[b].particle) {
          throw std::invalid_argument("a particle can collapse only once");
        }
      }
    }
  }

  /// Collapse the first `count` particles onto their own branch-1 states
  /// (gamma_1 = 1 per particle).
  static CollapseRecord toward_first_branch(const ProductEnvironment& env,
                                            std::size_t count) {
    std::vector<CollapseTarget> targets;
    targets.reserve(count);
    for (std::size_t j = 0; j < count && j < env.particle_count(); ++j) {
      targets.push_back({j, env.particle(j).first});
    }
    if (targets.size() != count) {
      throw std::invalid_argument("macroscopic core violated");
    }
    return CollapseRecord(std::move(targets));
  }

  /// Collapse the first `count` particles onto the normalized sum of their
  /// two branch states, making gamma_1 = gamma_2 particle by particle.
  static CollapseRecord toward_even_mixture(const ProductEnvironment& env,
                                            std::size_t count) {
    std::vector<CollapseTarget> targets;
    targets.reserve(count);
    for (std::size_t j = 0; j < count && j < env.particle_count(); ++j) {
      Eigen::Vector2cd sum = env.particle(j).first + env.particle(j).second;
      if (sum.norm() == 0.0) {
        throw std::invalid_argument(
            "branch states cancel; no even mixture exists");
      }
      targets.push_back({j, Eigen::Vector2cd(sum / sum.norm())});
    }
    if (targets.size() != count) {
      throw std::invalid_argument("macroscopic core violated");
    }
    return CollapseRecord(std::move(targets));
  }

  std::size_t collapsed_count() const { return targets_.size(); }
  const std::vector<CollapseTarget>& targets() const { return targets_; }

 private:
  std::vector<CollapseTarget> targets_;
};

/// Survivors of a partial collapse plus the amplitude each branch accumulated
/// from the collapsed particles (the product of that branch's gammas).
struct CollapseResult {
  ProductEnvironment surviving;
  Complex first_branch_factor{1.0, 0.0};
  Complex second_branch_factor{1.0, 0.0};
};

inline CollapseResult collapse_environment(const ProductEnvironment& env,
                                           const CollapseRecord& rec) {
  const std::size_t n = rec.collapsed_count();
  const std::size_t total = env.particle_count();
  if (n >= total) {
    throw std::invalid_argument("macroscopic core violated");
  }

  std::vector<bool> collapsed(total, false);
  Complex f1(1.0, 0.0);
  Complex f2(1.0, 0.0);
  for (const CollapseTarget& t : rec.targets()) {
    if (t.particle >= total) {
      throw std::invalid_argument("collapse target indexes a missing particle");
    }
    collapsed[t.particle] = true;
    const Complex g1 = t.state.dot(env.particle(t.particle).first);
    const Complex g2 = t.state.dot(env.particle(t.particle).second);
    if (std::abs(g1) == 0.0) {
      throw std::invalid_argument(
          "collapse target is orthogonal to the realized branch");
    }
    f1 *= g1;
    f2 *= g2;
  }

  std::vector<ProductEnvironment::BranchEncodings> rest;
  rest.reserve(total - n);
  for (std::size_t j = 0; j < total; ++j) {
    if (!collapsed[j]) rest.push_back(env.particle(j));
  }
  return CollapseResult{ProductEnvironment(std::move(rest)), f1, f2};
}

// ---------------------------------------------------------------------------
// Robustness ratio
// ---------------------------------------------------------------------------

/// A nonnegative ratio that may diverge. Finite values are carried as a
/// base-10 logarithm so that macroscopically large registers neither overflow
/// nor underflow; divergence is a tag, never a floating-point infinity.
struct RatioValue {
  bool diverges = false;
  double log10 = 0.0;

  double linear() const {
    if (diverges) {
      throw std::domain_error("ratio diverges; it has no linear value");
    }
    return std::pow(10.0, log10);
  }
};

/// Exact odds of the recorded branch against the other branch after a partial
/// collapse, together with the overlap-only approximation that ignores the
/// collapsed particles' amplitude factors.
struct RobustnessRatio {
  RatioValue exact;
  RatioValue approximate;
};

/// Odds that the surviving record still certifies branch 1 over branch 2:
///   |prod gamma_1| / (|<surviving 1|surviving 2>|^2 |prod gamma_2|).
/// Diverges when branch 2 is cut off entirely (a zero gamma_2 or orthogonal
/// surviving encodings). The approximate form keeps only the overlap term.
inline RobustnessRatio robustness_ratio(const ProductEnvironment& env,
                                        const CollapseRecord& rec) {
  const std::size_t total = env.particle_count();
  if (rec.collapsed_count() >= total) {
    throw std::invalid_argument("macroscopic core violated");
  }

  std::vector<bool> collapsed(total, false);
  double log10_g1 = 0.0;
  double log10_g2 = 0.0;
  bool gamma2_vanishes = false;
  for (const CollapseTarget& t : rec.targets()) {
    if (t.particle >= total) {
      throw std::invalid_argument("collapse target indexes a missing particle");
    }
    collapsed[t.particle] = true;
    const double g1 = std::abs(t.state.dot(env.particle(t.particle).first));
    const double g2 = std::abs(t.state.dot(env.particle(t.particle).second));
    if (g1 == 0.0) {
      throw std::invalid_argument(
          "collapse target is orthogonal to the realized branch");
    }
    log10_g1 += std::log10(g1);
    if (g2 == 0.0) {
      gamma2_vanishes = true;
    } else {
      log10_g2 += std::log10(g2);
    }
  }

  double log10_overlap = 0.0;
  bool overlap_vanishes = false;
  for (std::size_t j = 0; j < total; ++j) {
    if (collapsed[j]) continue;
    const double ov = std::abs(env.particle_overlap(j));
    if (ov == 0.0) {
      overlap_vanishes = true;
    } else {
      log10_overlap += std::log10(ov);
    }
  }

  RobustnessRatio out;
  out.approximate.diverges = overlap_vanishes;
  if (!overlap_vanishes) out.approximate.log10 = -2.0 * log10_overlap;
  out.exact.diverges = overlap_vanishes || gamma2_vanishes;
  if (!out.exact.diverges) {
    out.exact.log10 = log10_g1 - 2.0 * log10_overlap - log10_g2;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Population decay
// ---------------------------------------------------------------------------

/// Exponential envelope for the number of intact environment particles.
class DecayModel {
 public:
  DecayModel(double initial_count, double lifetime)
      : initial_count_(initial_count), lifetime_(lifetime) {
    if (!(initial_count >= 1.0)) {
      throw std::invalid_argument("initial population must be at least 1");
    }
    if (!(lifetime > 0.0)) {
      throw std::invalid_argument("lifetime must be positive");
    }
  }

  double initial_count() const { return initial_count_; }
  double lifetime() const { return lifetime_; }

 private:
  double initial_count_;
  double lifetime_;
};

inline double decay_population(const DecayModel& model, double t) {
  if (t < 0.0) {
    throw std::invalid_argument("decay time must be nonnegative");
  }
  return model.initial_count() * std::exp(-t / model.lifetime());
}

// ---------------------------------------------------------------------------
// Grid sweep
// ---------------------------------------------------------------------------

/// One grid point of the uniform-overlap sweep: N particles at per-particle
/// overlap c, n of them collapsed toward branch 1.
struct RobustnessSweepRow {
  double c = 0.0;
  std::size_t n_total = 0;
  std::size_t n_collapsed = 0;
  double log10_ratio_exact = 0.0;
  double log10_ratio_approx = 0.0;
};

/// Cartesian sweep over overlap values, register sizes, and collapse counts,
/// in that nesting order. Rows are deterministic and suitable for direct CSV
/// emission. Uniform registers at c > 0 never diverge.
inline std::vector<RobustnessSweepRow> sweep_robustness(
    const std::vector<double>& overlaps, const std::vector<std::size_t>& totals,
    const std::vector<std::size_t>& collapsed_counts) {
  if (overlaps.empty() || totals.empty() || collapsed_counts.empty()) {
    throw std::invalid_argument("sweep grids must be nonempty");
  }
  for (std::size_t n_total : totals) {
    for (std::size_t n_collapsed : collapsed_counts) {
      if (n_collapsed >= n_total) {
        throw std::invalid_argument("macroscopic core violated");
      }
    }
  }
  std::vector<RobustnessSweepRow> rows;
  rows.reserve(overlaps.size() * totals.size() * collapsed_counts.size());
  for (double c : overlaps) {
    for (std::size_t n_total : totals) {
      ProductEnvironment env = ProductEnvironment::uniform(n_total, c);
      for (std::size_t n_collapsed : collapsed_counts) {
        RobustnessRatio ratio = robustness_ratio(
            env, CollapseRecord::toward_first_branch(env, n_collapsed));
        if (ratio.exact.diverges) {
          throw std::domain_error(
              "sweep produced a divergent ratio; overlaps must be positive");
        }
        rows.push_back(RobustnessSweepRow{c, n_total, n_collapsed,
                                          ratio.exact.log10,
                                          ratio.approximate.log10});
      }
    }
  }
  return rows;
}

}  // namespace tsvf
