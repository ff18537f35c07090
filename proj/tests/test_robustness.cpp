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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>

#include "test_util.hpp"
#include "tsvf/robustness.hpp"

using namespace tsvf;
using namespace tsvf_test;

namespace {

using Qubit = Eigen::Vector2cd;
using Encodings = ProductEnvironment::BranchEncodings;

Qubit random_qubit(std::mt19937_64& rng) {
  Vector v = random_state_vector(2, rng);
  return Qubit(v(0), v(1));
}

// Brute-force 2^k tensor of per-particle factors, first particle varying
// slowest. This is the dense path the analytic code must agree with.
Vector dense_tensor(const std::vector<Qubit>& factors) {
  Vector v = Vector::Ones(1);
  for (const Qubit& q : factors) {
    Vector next(v.size() * 2);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      next(2 * i) = v(i) * q(0);
      next(2 * i + 1) = v(i) * q(1);
    }
    v = std::move(next);
  }
  return v;
}

std::vector<Qubit> branch_factors(const ProductEnvironment& env, bool second) {
  std::vector<Qubit> f;
  for (std::size_t j = 0; j < env.particle_count(); ++j) {
    f.push_back(second ? env.particle(j).second : env.particle(j).first);
  }
  return f;
}

// Dense-register oracle for the ratio: project every collapsed particle of
// each full branch tensor onto its target, take the resulting amplitudes,
// and divide by the squared dense overlap of the surviving tensors.
double dense_ratio_oracle(const ProductEnvironment& env,
                          const CollapseRecord& rec) {
  std::vector<const Qubit*> target_of(env.particle_count(), nullptr);
  for (const CollapseTarget& t : rec.targets()) {
    target_of[t.particle] = &t.state;
  }

  std::vector<Qubit> bra1;
  std::vector<Qubit> bra2;
  std::vector<Qubit> surv1;
  std::vector<Qubit> surv2;
  for (std::size_t j = 0; j < env.particle_count(); ++j) {
    if (target_of[j] != nullptr) {
      bra1.push_back(*target_of[j]);
      bra2.push_back(*target_of[j]);
    } else {
      bra1.push_back(env.particle(j).first);
      bra2.push_back(env.particle(j).second);
      surv1.push_back(env.particle(j).first);
      surv2.push_back(env.particle(j).second);
    }
  }

  const Complex amp1 =
      dense_tensor(bra1).dot(dense_tensor(branch_factors(env, false)));
  const Complex amp2 =
      dense_tensor(bra2).dot(dense_tensor(branch_factors(env, true)));
  const Complex overlap = dense_tensor(surv1).dot(dense_tensor(surv2));
  return std::abs(amp1) / (std::norm(overlap) * std::abs(amp2));
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y,
                    double* max_residual) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  *max_residual = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    *max_residual =
        std::max(*max_residual, std::abs(y[i] - slope * x[i] - intercept));
  }
  return slope;
}

}  // namespace

// ---------------------------------------------------------------------------
// Environments and overlaps
// ---------------------------------------------------------------------------

TEST_CASE("analytic environments validate their encodings") {
  REQUIRE_THROWS_AS(ProductEnvironment({}), std::invalid_argument);
  Encodings skew;
  skew.first = Qubit(1.0, 0.0);
  skew.second = Qubit(0.5, 0.0);  // not normalized
  REQUIRE_THROWS_AS(ProductEnvironment({skew}), std::invalid_argument);

  REQUIRE_THROWS_AS(ProductEnvironment::uniform(3, 1.5),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ProductEnvironment::uniform(3, -0.1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ProductEnvironment::uniform(0, 0.5),
                    std::invalid_argument);

  ProductEnvironment env = ProductEnvironment::uniform(4, 0.7);
  REQUIRE(env.particle_count() == 4);
  for (std::size_t j = 0; j < 4; ++j) {
    REQUIRE(std::abs(env.particle_overlap(j) - Complex(0.7)) < 1e-14);
  }
}

TEST_CASE("register overlap is the product of per-particle overlaps") {
  // Dense oracle first: an 8-particle register at uniform overlap 0.6.
  ProductEnvironment env = ProductEnvironment::uniform(8, 0.6);
  const Complex dense = dense_tensor(branch_factors(env, false))
                            .dot(dense_tensor(branch_factors(env, true)));
  REQUIRE(std::abs(environment_overlap(env) - dense) < 1e-12);
  REQUIRE(std::abs(environment_overlap(env) - std::pow(0.6, 8)) < 1e-12);

  // One particle: the overlap is just that particle's overlap.
  ProductEnvironment one = ProductEnvironment::uniform(1, 0.3);
  REQUIRE(std::abs(environment_overlap(one) - Complex(0.3)) < 1e-15);

  // Orthogonal per-particle encodings: the register overlap vanishes.
  ProductEnvironment ortho = ProductEnvironment::uniform(5, 0.0);
  REQUIRE(std::abs(environment_overlap(ortho)) == 0.0);

  // A non-uniform register still factorizes.
  std::mt19937_64 rng(411);
  std::vector<Encodings> parts;
  for (int j = 0; j < 6; ++j) {
    parts.push_back({random_qubit(rng), random_qubit(rng)});
  }
  ProductEnvironment mixed(parts);
  const Complex dense_mixed =
      dense_tensor(branch_factors(mixed, false))
          .dot(dense_tensor(branch_factors(mixed, true)));
  REQUIRE(std::abs(environment_overlap(mixed) - dense_mixed) < 1e-12);
}

// ---------------------------------------------------------------------------
// Partial collapse
// ---------------------------------------------------------------------------

TEST_CASE("collapsing no particles changes nothing") {
  ProductEnvironment env = ProductEnvironment::uniform(5, 0.4);
  CollapseResult res = collapse_environment(env, CollapseRecord({}));
  REQUIRE(res.surviving.particle_count() == 5);
  REQUIRE(std::abs(res.first_branch_factor - Complex(1.0)) < 1e-15);
  REQUIRE(std::abs(res.second_branch_factor - Complex(1.0)) < 1e-15);
  REQUIRE(std::abs(environment_overlap(res.surviving) -
                   environment_overlap(env)) < 1e-15);
}

TEST_CASE("collapse toward the realized branch keeps its amplitude intact") {
  ProductEnvironment env = ProductEnvironment::uniform(4, 0.5);
  CollapseResult res = collapse_environment(
      env, CollapseRecord::toward_first_branch(env, 1));
  REQUIRE(res.surviving.particle_count() == 3);
  REQUIRE(std::abs(res.first_branch_factor - Complex(1.0)) < 1e-14);
  REQUIRE(std::abs(res.second_branch_factor - Complex(0.5)) < 1e-14);
}

TEST_CASE("branch factors multiply across collapsed particles") {
  ProductEnvironment env = ProductEnvironment::uniform(3, 0.5);
  CollapseResult res = collapse_environment(
      env, CollapseRecord::toward_first_branch(env, 2));
  REQUIRE(res.surviving.particle_count() == 1);
  REQUIRE(std::abs(res.first_branch_factor - Complex(1.0)) < 1e-14);
  REQUIRE(std::abs(res.second_branch_factor - Complex(0.25)) < 1e-14);
}

TEST_CASE("collapse never touches the surviving particles") {
  std::mt19937_64 rng(975);
  std::vector<Encodings> parts;
  for (int j = 0; j < 6; ++j) {
    parts.push_back({random_qubit(rng), random_qubit(rng)});
  }
  ProductEnvironment env(parts);
  CollapseRecord rec({{1, random_qubit(rng)}, {4, random_qubit(rng)}});
  CollapseResult res = collapse_environment(env, rec);
  REQUIRE(res.surviving.particle_count() == 4);
  // Survivors are particles 0, 2, 3, 5 in order; their overlaps are intact.
  const std::size_t kept[] = {0, 2, 3, 5};
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(std::abs(res.surviving.particle_overlap(i) -
                     env.particle_overlap(kept[i])) < 1e-12);
  }
}

TEST_CASE("collapse rejects impossible records") {
  ProductEnvironment env = ProductEnvironment::uniform(3, 0.5);

  // Collapsing every particle (or more) leaves no macroscopic core.
  REQUIRE_THROWS_WITH(
      collapse_environment(env, CollapseRecord::toward_first_branch(env, 3)),
      Catch::Matchers::ContainsSubstring("macroscopic core violated"));
  REQUIRE_THROWS_WITH(CollapseRecord::toward_first_branch(env, 4),
                      Catch::Matchers::ContainsSubstring("macroscopic core"));

  // A target orthogonal to the realized branch is outside the model.
  ProductEnvironment ortho = ProductEnvironment::uniform(3, 0.0);
  CollapseRecord wrong({{0, ortho.particle(0).second}});
  REQUIRE_THROWS_WITH(
      collapse_environment(ortho, wrong),
      Catch::Matchers::ContainsSubstring("orthogonal to the realized branch"));

  // Out-of-range and duplicated particle indices.
  REQUIRE_THROWS_AS(
      collapse_environment(env, CollapseRecord({{7, Qubit(1.0, 0.0)}})),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      CollapseRecord({{1, Qubit(1.0, 0.0)}, {1, Qubit(1.0, 0.0)}}),
      std::invalid_argument);
  REQUIRE_THROWS_AS(CollapseRecord({{0, Qubit(0.5, 0.0)}}),
                    std::invalid_argument);  // unnormalized target
}

// ---------------------------------------------------------------------------
// Robustness ratio against the dense oracle
// ---------------------------------------------------------------------------

TEST_CASE("analytic ratio equals the dense-register computation") {
  for (std::size_t n_total : {2u, 4u, 6u, 8u, 10u, 12u}) {
    for (double c : {0.3, 0.5, 0.9}) {
      ProductEnvironment env = ProductEnvironment::uniform(n_total, c);
      for (std::size_t n : {std::size_t{1}, std::size_t{2}, n_total / 2,
                            n_total - 1}) {
        if (n == 0 || n >= n_total) continue;
        CollapseRecord rec = CollapseRecord::toward_first_branch(env, n);
        const double dense = dense_ratio_oracle(env, rec);
        RobustnessRatio ratio = robustness_ratio(env, rec);
        REQUIRE_FALSE(ratio.exact.diverges);
        REQUIRE(std::abs(ratio.exact.linear() - dense) <= 1e-9 * dense);
      }
    }
  }
}

TEST_CASE("analytic ratio matches dense registers with arbitrary states") {
  std::mt19937_64 rng(20260815);
  for (std::size_t n_total : {3u, 5u, 8u, 11u}) {
    std::vector<Encodings> parts;
    for (std::size_t j = 0; j < n_total; ++j) {
      parts.push_back({random_qubit(rng), random_qubit(rng)});
    }
    ProductEnvironment env(parts);
    std::vector<CollapseTarget> targets;
    for (std::size_t j = 0; j + 1 < n_total; j += 2) {
      targets.push_back({j, random_qubit(rng)});
    }
    CollapseRecord rec(targets);
    const double dense = dense_ratio_oracle(env, rec);
    RobustnessRatio ratio = robustness_ratio(env, rec);
    REQUIRE_FALSE(ratio.exact.diverges);
    REQUIRE(std::abs(ratio.exact.linear() - dense) <= 1e-9 * dense);

    // The approximation keeps only the surviving-overlap term.
    std::vector<bool> collapsed(n_total, false);
    for (const CollapseTarget& t : rec.targets()) collapsed[t.particle] = true;
    Complex surv(1.0, 0.0);
    for (std::size_t j = 0; j < n_total; ++j) {
      if (!collapsed[j]) surv *= env.particle_overlap(j);
    }
    REQUIRE(std::abs(ratio.approximate.linear() - 1.0 / std::norm(surv)) <=
            1e-9 / std::norm(surv));
  }
}

TEST_CASE("even-mixture collapse reproduces the headline sixteen-doubling") {
  // 10 particles at overlap 1/2, 2 collapsed so that both branch factors
  // cancel: the odds are 0.5^-16 = 65536 exactly.
  ProductEnvironment env = ProductEnvironment::uniform(10, 0.5);
  CollapseRecord rec = CollapseRecord::toward_even_mixture(env, 2);
  RobustnessRatio ratio = robustness_ratio(env, rec);
  REQUIRE_FALSE(ratio.exact.diverges);
  REQUIRE(std::abs(ratio.exact.linear() - 65536.0) <= 1e-9 * 65536.0);
  const double dense = dense_ratio_oracle(env, rec);
  REQUIRE(std::abs(ratio.exact.linear() - dense) <= 1e-9 * dense);
}

TEST_CASE("default collapse gives the closed-form exponent") {
  for (double c : {0.3, 0.5, 0.9}) {
    for (std::size_t n_total : {4u, 9u}) {
      for (std::size_t n : {1u, 2u}) {
        ProductEnvironment env = ProductEnvironment::uniform(n_total, c);
        RobustnessRatio ratio = robustness_ratio(
            env, CollapseRecord::toward_first_branch(env, n));
        const double expect =
            -(2.0 * static_cast<double>(n_total - n) + static_cast<double>(n)) *
            std::log10(c);
        REQUIRE(std::abs(ratio.exact.log10 - expect) < 1e-12);
        REQUIRE(std::abs(ratio.approximate.log10 +
                         2.0 * static_cast<double>(n_total - n) *
                             std::log10(c)) < 1e-12);
      }
    }
  }
}

TEST_CASE("divergence is a tag rather than a floating-point infinity") {
  // Orthogonal surviving encodings: both forms diverge.
  ProductEnvironment ortho = ProductEnvironment::uniform(4, 0.0);
  RobustnessRatio blocked = robustness_ratio(
      ortho, CollapseRecord::toward_first_branch(ortho, 1));
  REQUIRE(blocked.exact.diverges);
  REQUIRE(blocked.approximate.diverges);
  REQUIRE_THROWS_AS(blocked.exact.linear(), std::domain_error);

  // A vanishing branch-2 amplitude with overlapping survivors: the exact
  // ratio diverges while the approximation stays finite.
  std::vector<Encodings> parts;
  Encodings head;
  head.first = Qubit(1.0, 0.0);
  head.second = Qubit(0.0, 1.0);
  parts.push_back(head);
  ProductEnvironment tail = ProductEnvironment::uniform(2, 0.5);
  parts.push_back(tail.particle(0));
  parts.push_back(tail.particle(1));
  ProductEnvironment env(parts);
  RobustnessRatio mixed =
      robustness_ratio(env, CollapseRecord({{0, Qubit(1.0, 0.0)}}));
  REQUIRE(mixed.exact.diverges);
  REQUIRE_FALSE(mixed.approximate.diverges);
  REQUIRE(std::abs(mixed.approximate.linear() - 16.0) < 1e-9);
}

TEST_CASE("the ratio ignores how particles are numbered") {
  std::mt19937_64 rng(777);
  const std::size_t n_total = 7;
  std::vector<Encodings> parts;
  for (std::size_t j = 0; j < n_total; ++j) {
    parts.push_back({random_qubit(rng), random_qubit(rng)});
  }
  ProductEnvironment env(parts);
  CollapseRecord rec(
      {{1, random_qubit(rng)}, {4, random_qubit(rng)}, {5, random_qubit(rng)}});
  RobustnessRatio base = robustness_ratio(env, rec);

  std::vector<std::size_t> perm(n_total);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Encodings> shuffled(n_total, parts[0]);
  for (std::size_t j = 0; j < n_total; ++j) shuffled[perm[j]] = parts[j];
  std::vector<CollapseTarget> moved;
  for (const CollapseTarget& t : rec.targets()) {
    moved.push_back({perm[t.particle], t.state});
  }
  RobustnessRatio permuted =
      robustness_ratio(ProductEnvironment(shuffled), CollapseRecord(moved));
  REQUIRE(std::abs(base.exact.log10 - permuted.exact.log10) < 1e-12);
  REQUIRE(std::abs(base.approximate.log10 - permuted.approximate.log10) <
          1e-12);
}

// ---------------------------------------------------------------------------
// Decay envelope
// ---------------------------------------------------------------------------

TEST_CASE("population decay follows the exponential envelope") {
  DecayModel model(1000.0, 2.5);
  REQUIRE(std::abs(decay_population(model, 0.0) - 1000.0) < 1e-12);
  REQUIRE(std::abs(decay_population(model, 2.5) - 1000.0 / std::exp(1.0)) <
          1e-9);

  double last = decay_population(model, 0.0);
  double last_drop = last;
  for (double t = 0.5; t < 40.0; t += 0.5) {
    const double now = decay_population(model, t);
    REQUIRE(now <= last);
    const double drop = last - now;
    REQUIRE(drop <= last_drop + 1e-12);  // the rate itself keeps shrinking
    last = now;
    last_drop = drop;
  }
  REQUIRE(decay_population(model, 100.0) < 1e-9);

  REQUIRE_THROWS_AS(decay_population(model, -0.1), std::invalid_argument);
  REQUIRE_THROWS_AS(DecayModel(0.5, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(DecayModel(10.0, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(DecayModel(10.0, -1.0), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Grid sweep
// ---------------------------------------------------------------------------

TEST_CASE("the sweep enumerates the grid in deterministic order") {
  std::vector<double> cs = {0.3, 0.5, 0.9};
  std::vector<std::size_t> ns = {4, 6, 8, 10, 12};
  std::vector<std::size_t> ks = {1, 2};
  std::vector<RobustnessSweepRow> rows = sweep_robustness(cs, ns, ks);
  REQUIRE(rows.size() == 30);

  std::size_t i = 0;
  for (double c : cs) {
    for (std::size_t n_total : ns) {
      for (std::size_t n : ks) {
        const RobustnessSweepRow& row = rows[i++];
        REQUIRE(row.c == c);
        REQUIRE(row.n_total == n_total);
        REQUIRE(row.n_collapsed == n);
        const double expect =
            -(2.0 * static_cast<double>(n_total - n) + static_cast<double>(n)) *
            std::log10(c);
        REQUIRE(std::abs(row.log10_ratio_exact - expect) < 1e-12);
        REQUIRE(std::abs(row.log10_ratio_approx +
                         2.0 * static_cast<double>(n_total - n) *
                             std::log10(c)) < 1e-12);
      }
    }
  }
}

TEST_CASE("log odds grow linearly in the surviving count") {
  std::vector<double> cs = {0.3, 0.5, 0.9};
  std::vector<std::size_t> ns = {4, 6, 8, 10, 12};
  std::vector<std::size_t> ks = {1, 2};
  std::vector<RobustnessSweepRow> rows = sweep_robustness(cs, ns, ks);

  for (double c : cs) {
    for (std::size_t n : ks) {
      std::vector<double> x;
      std::vector<double> y;
      for (const RobustnessSweepRow& row : rows) {
        if (row.c == c && row.n_collapsed == n) {
          x.push_back(static_cast<double>(row.n_total - row.n_collapsed));
          y.push_back(row.log10_ratio_exact);
        }
      }
      REQUIRE(x.size() == 5);
      double residual = 0.0;
      const double slope = fitted_slope(x, y, &residual);
      REQUIRE(std::abs(slope + 2.0 * std::log10(c)) <= 1e-9);
      REQUIRE(residual <= 1e-9);
      // More survivors means strictly larger odds for c < 1.
      for (std::size_t i = 1; i < y.size(); ++i) REQUIRE(y[i] > y[i - 1]);
    }
  }

  // For a fixed grid point, shrinking the overlap raises the odds.
  for (std::size_t i = 0; i + 10 < rows.size(); ++i) {
    REQUIRE(rows[i].log10_ratio_exact > rows[i + 10].log10_ratio_exact);
  }
}

TEST_CASE("perfectly overlapping records contribute no odds at all") {
  std::vector<RobustnessSweepRow> rows =
      sweep_robustness({1.0}, {5}, {1});
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].log10_ratio_exact == 0.0);
  REQUIRE(rows[0].log10_ratio_approx == 0.0);
}

TEST_CASE("macroscopically large registers stay in log space") {
  for (std::size_t survivors : {10u, 100u, 1000u}) {
    ProductEnvironment env = ProductEnvironment::uniform(survivors + 1, 0.9);
    RobustnessRatio ratio =
        robustness_ratio(env, CollapseRecord::toward_first_branch(env, 1));
    const double expect = -2.0 * static_cast<double>(survivors) * std::log10(0.9);
    REQUIRE(std::abs(ratio.approximate.log10 - expect) < 1e-9);
  }
  // The headline figures: about 0.915, 9.15, and 91.5 decades.
  ProductEnvironment env = ProductEnvironment::uniform(101, 0.9);
  RobustnessRatio ratio =
      robustness_ratio(env, CollapseRecord::toward_first_branch(env, 1));
  REQUIRE(std::abs(ratio.approximate.log10 - 9.1515) < 1e-3);
}

TEST_CASE("sweeps reject empty or coreless grids") {
  REQUIRE_THROWS_AS(sweep_robustness({}, {4}, {1}), std::invalid_argument);
  REQUIRE_THROWS_AS(sweep_robustness({0.5}, {}, {1}), std::invalid_argument);
  REQUIRE_THROWS_AS(sweep_robustness({0.5}, {4}, {}), std::invalid_argument);
  REQUIRE_THROWS_WITH(
      sweep_robustness({0.5}, {4, 6}, {1, 4}),
      Catch::Matchers::ContainsSubstring("macroscopic core violated"));
}
