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

#include "test_util.hpp"

using namespace tsvf;
using namespace tsvf_test;

TEST_CASE("layout rejects duplicate labels naming the offender") {
  REQUIRE_THROWS_WITH(SubsystemLayout({{"A", 2}, {"B", 3}, {"A", 2}}),
                      Catch::Matchers::ContainsSubstring("'A'"));
}

TEST_CASE("layout rejects zero-dimensional subsystems") {
  REQUIRE_THROWS_AS(SubsystemLayout({{"A", 0}}), std::invalid_argument);
}

TEST_CASE("layout enforces the dense cap") {
  std::vector<Subsystem> subs;
  for (int i = 0; i < 21; ++i) subs.push_back({"q" + std::to_string(i), 2});
  REQUIRE_THROWS_WITH(SubsystemLayout(subs),
                      Catch::Matchers::ContainsSubstring("2^20"));
  subs.pop_back();
  REQUIRE(SubsystemLayout(subs).dimension() == (std::size_t{1} << 20));
}

TEST_CASE("first-listed subsystem varies slowest") {
  SubsystemLayout ab({{"A", 2}, {"B", 3}});
  REQUIRE(ab.stride(0) == 3);
  REQUIRE(ab.stride(1) == 1);
  REQUIRE(ab.global_index({1, 2}) == 5);
  REQUIRE(ab.digits(4) == std::vector<std::size_t>{1, 1});
}

TEST_CASE("tensor product of spin states yields the expected amplitudes") {
  PureState up(qubit("A"), up_z());
  PureState down(qubit("B"), down_z());
  PureState prod = tensor_product(up, down);
  // |up_A down_B> should sit at global index 0*2 + 1 = 1.
  Vector expect(4);
  expect << 0, 1, 0, 0;
  REQUIRE(max_abs(Vector(prod.amplitudes() - expect)) == 0.0);
}

TEST_CASE("tensor product rejects shared labels naming the label") {
  PureState a(qubit("A"), up_z());
  PureState b(qubit("A"), down_z());
  REQUIRE_THROWS_WITH(tensor_product(a, b),
                      Catch::Matchers::ContainsSubstring("'A'"));
}

TEST_CASE("tensor product is associative with bit-identical amplitudes") {
  // Dyadic amplitudes keep every product exact, so the two association orders
  // must agree bit for bit under the fixed index convention.
  PureState a(qubit("A"), Vector{{Complex(0.5), Complex(0.5, -0.5)}});
  PureState b(qubit("B"), Vector{{Complex(0.25), Complex(0.75)}});
  PureState c(qubit("C"), Vector{{Complex(0.0, 1.0), Complex(0.5)}});
  PureState left = tensor_product(tensor_product(a, b), c);
  PureState right = tensor_product(a, tensor_product(b, c));
  REQUIRE(left.layout() == right.layout());
  for (Eigen::Index i = 0; i < left.amplitudes().size(); ++i) {
    REQUIRE(left.amplitudes()[i].real() == right.amplitudes()[i].real());
    REQUIRE(left.amplitudes()[i].imag() == right.amplitudes()[i].imag());
  }
}

TEST_CASE("inner product is conjugate-linear in the bra") {
  SubsystemLayout q = qubit("s");
  PureState x(q, up_x());
  PureState z(q, up_z());
  REQUIRE(std::abs(inner_product(x, z) - Complex(M_SQRT1_2)) < 1e-15);

  std::mt19937_64 rng(11);
  PureState u(q, random_state_vector(2, rng));
  PureState v(q, random_state_vector(2, rng));
  REQUIRE(std::abs(inner_product(u, v) - std::conj(inner_product(v, u))) < 1e-15);
  REQUIRE(std::abs(inner_product(u, u) - Complex(u.norm() * u.norm())) < 1e-14);
}

TEST_CASE("states must be finite and nonzero") {
  SubsystemLayout q = qubit("s");
  REQUIRE_THROWS_AS(PureState(q, Vector::Zero(2)), std::invalid_argument);
  Vector bad(2);
  bad << Complex(std::numeric_limits<double>::quiet_NaN()), Complex(0);
  REQUIRE_THROWS_AS(PureState(q, bad), std::invalid_argument);
}

TEST_CASE("operator flags are verified at construction") {
  SubsystemLayout q = qubit("s");
  Matrix not_herm(2, 2);
  not_herm << 0, 1, 2, 0;
  REQUIRE_THROWS_AS(OperatorMatrix(q, not_herm, {.hermitian = true}),
                    std::invalid_argument);
  Matrix not_unitary = 2.0 * pauli_x();
  REQUIRE_THROWS_AS(OperatorMatrix(q, not_unitary, {.unitary = true}),
                    std::invalid_argument);
  REQUIRE_NOTHROW(OperatorMatrix(q, pauli_y(), {.hermitian = true, .unitary = true}));
}

TEST_CASE("embedding sigma_x on qubit A flips only qubit A") {
  SubsystemLayout ab({{"A", 2}, {"B", 2}});
  OperatorMatrix sx(qubit("A"), pauli_x(), {.hermitian = true, .unitary = true});
  OperatorMatrix lifted = embed_operator(sx, ab);
  PureState upup = PureState::basis_state(ab, 0);  // |up_A up_B>
  PureState flipped = lifted.apply(upup);
  // |down_A up_B> has digits (1, 0) -> global index 2.
  REQUIRE(max_abs(Vector(flipped.amplitudes() -
                         PureState::basis_state(ab, 2).amplitudes())) == 0.0);
}

TEST_CASE("embedding two single-qubit operators equals the hand tensor") {
  SubsystemLayout ab({{"A", 2}, {"B", 2}});
  OperatorMatrix sy(qubit("A"), pauli_y(), {.hermitian = true});
  OperatorMatrix sx(qubit("B"), pauli_x(), {.hermitian = true});
  Matrix product = embed_operator(sy, ab).matrix() * embed_operator(sx, ab).matrix();

  // Hand-enumerated sigma_y (x) sigma_x with A most significant.
  Matrix expect(4, 4);
  expect << Complex(0), Complex(0), Complex(0), Complex(0, -1),
      Complex(0), Complex(0), Complex(0, -1), Complex(0),
      Complex(0), Complex(0, 1), Complex(0), Complex(0),
      Complex(0, 1), Complex(0), Complex(0), Complex(0);
  REQUIRE(max_entry_diff(product, expect) == 0.0);

  // Order of embedding cannot matter for disjoint supports.
  Matrix swapped = embed_operator(sx, ab).matrix() * embed_operator(sy, ab).matrix();
  REQUIRE(max_entry_diff(swapped, expect) == 0.0);

  // And it agrees with the direct tensor constructor.
  OperatorMatrix direct = tensor_product(
      OperatorMatrix(qubit("A"), pauli_y(), {.hermitian = true}),
      OperatorMatrix(qubit("B"), pauli_x(), {.hermitian = true}));
  REQUIRE(max_entry_diff(direct.matrix(), expect) == 0.0);
}

TEST_CASE("embedding with a dimension mismatch names the subsystem") {
  SubsystemLayout target({{"A", 2}, {"B", 3}});
  OperatorMatrix op(qubit("B"), pauli_x());
  REQUIRE_THROWS_WITH(embed_operator(op, target),
                      Catch::Matchers::ContainsSubstring("'B'"));
}

TEST_CASE("embedding an operator on an out-of-order sub-layout") {
  // Operator declared on (C, A) while the target orders (A, B, C).
  SubsystemLayout target({{"A", 2}, {"B", 2}, {"C", 2}});
  SubsystemLayout ca({{"C", 2}, {"A", 2}});
  OperatorMatrix op(ca, tensor_product(OperatorMatrix(qubit("C"), pauli_x()),
                                       OperatorMatrix(qubit("A"), pauli_z()))
                            .matrix());
  Matrix via_sub = embed_operator(op, target).matrix();
  Matrix via_parts =
      embed_operator(OperatorMatrix(qubit("C"), pauli_x()), target).matrix() *
      embed_operator(OperatorMatrix(qubit("A"), pauli_z()), target).matrix();
  REQUIRE(max_entry_diff(via_sub, via_parts) < 1e-15);
}

TEST_CASE("partial trace of a Bell projector leaves the maximally mixed qubit") {
  SubsystemLayout ab({{"A", 2}, {"B", 2}});
  Vector bell(4);
  bell << M_SQRT1_2, 0, 0, M_SQRT1_2;
  Matrix rho = bell * bell.adjoint();
  OperatorMatrix reduced = partial_trace(OperatorMatrix(ab, rho), {"A"});
  REQUIRE(reduced.layout() == qubit("A"));
  REQUIRE(max_entry_diff(reduced.matrix(), 0.5 * Matrix::Identity(2, 2)) < 1e-15);
}

TEST_CASE("partial trace factorizes product operators") {
  std::mt19937_64 rng(23);
  SubsystemLayout ab({{"A", 3}, {"B", 4}});
  Matrix x = random_hermitian(3, rng);
  Matrix y = random_hermitian(4, rng);
  OperatorMatrix prod = tensor_product(OperatorMatrix(SubsystemLayout({{"A", 3}}), x),
                                       OperatorMatrix(SubsystemLayout({{"B", 4}}), y));
  OperatorMatrix redA = partial_trace(prod, {"A"});
  REQUIRE(max_entry_diff(redA.matrix(), Matrix(y.trace() * x)) < 1e-12);
  OperatorMatrix redB = partial_trace(prod, {"B"});
  REQUIRE(max_entry_diff(redB.matrix(), Matrix(x.trace() * y)) < 1e-12);
}

TEST_CASE("partial trace keeping everything returns the operator exactly") {
  std::mt19937_64 rng(29);
  SubsystemLayout ab({{"A", 2}, {"B", 3}});
  Matrix m(6, 6);
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index r = 0; r < 6; ++r)
    for (Eigen::Index c = 0; c < 6; ++c) m(r, c) = Complex(g(rng), g(rng));
  OperatorMatrix full(ab, m);
  OperatorMatrix kept = partial_trace(full, {"A", "B"});
  for (Eigen::Index r = 0; r < 6; ++r) {
    for (Eigen::Index c = 0; c < 6; ++c) {
      REQUIRE(kept.matrix()(r, c).real() == m(r, c).real());
      REQUIRE(kept.matrix()(r, c).imag() == m(r, c).imag());
    }
  }
}

TEST_CASE("partial trace result order follows the original layout") {
  SubsystemLayout abc({{"A", 2}, {"B", 2}, {"C", 2}});
  OperatorMatrix op = OperatorMatrix::identity(abc);
  OperatorMatrix red = partial_trace(op, {"C", "A"});
  REQUIRE(red.layout() == SubsystemLayout({{"A", 2}, {"C", 2}}));
}

TEST_CASE("constant sigma_z for a quarter period gives diag(-i, i)") {
  OperatorMatrix h(qubit("s"), pauli_z(), {.hermitian = true});
  PiecewiseHamiltonian sched({{M_PI_2, h}});
  Matrix u = time_ordered_unitary(sched).matrix();
  Matrix expect(2, 2);
  expect << Complex(0, -1), Complex(0), Complex(0), Complex(0, 1);
  REQUIRE(max_entry_diff(u, expect) < 1e-14);
}

TEST_CASE("non-commuting segments are ordered and match the fine-step oracle") {
  SubsystemLayout q = qubit("s");
  OperatorMatrix hx(q, pauli_x(), {.hermitian = true});
  OperatorMatrix hz(q, pauli_z(), {.hermitian = true});
  const double t1 = 0.7, t2 = 1.1;

  Matrix u = time_ordered_unitary(PiecewiseHamiltonian({{t1, hx}, {t2, hz}})).matrix();
  Matrix u_rev =
      time_ordered_unitary(PiecewiseHamiltonian({{t2, hz}, {t1, hx}})).matrix();
  REQUIRE(max_entry_diff(u, u_rev) > 0.1);  // genuinely non-commuting

  // Independent oracle: many 4th-order Taylor steps per segment.
  Matrix oracle = taylor_step_propagator(pauli_z(), t2, 10000) *
                  taylor_step_propagator(pauli_x(), t1, 10000);
  REQUIRE(max_entry_diff(u, oracle) < 1e-8);

  // Closed form for the same product, from the angle-sum identities.
  Matrix ux = std::cos(t1) * Matrix::Identity(2, 2) -
              Complex(0, std::sin(t1)) * pauli_x();
  Matrix uz(2, 2);
  uz << std::exp(Complex(0, -t2)), Complex(0), Complex(0), std::exp(Complex(0, t2));
  REQUIRE(max_entry_diff(u, Matrix(uz * ux)) < 1e-12);
}

TEST_CASE("concatenated schedules compose as matrix products") {
  std::mt19937_64 rng(37);
  SubsystemLayout q({{"s", 3}});
  OperatorMatrix h1(q, random_hermitian(3, rng), {.hermitian = true});
  OperatorMatrix h2(q, random_hermitian(3, rng), {.hermitian = true});
  OperatorMatrix h3(q, random_hermitian(3, rng), {.hermitian = true});
  Matrix whole = time_ordered_unitary(
                     PiecewiseHamiltonian({{0.3, h1}, {0.4, h2}, {0.5, h3}}))
                     .matrix();
  Matrix parts = time_ordered_unitary(PiecewiseHamiltonian({{0.5, h3}})).matrix() *
                 time_ordered_unitary(PiecewiseHamiltonian({{0.4, h2}})).matrix() *
                 time_ordered_unitary(PiecewiseHamiltonian({{0.3, h1}})).matrix();
  REQUIRE(max_entry_diff(whole, parts) < 1e-12);
}

TEST_CASE("evolution preserves inner products") {
  std::mt19937_64 rng(41);
  SubsystemLayout q({{"s", 4}});
  OperatorMatrix h(q, random_hermitian(4, rng), {.hermitian = true});
  OperatorMatrix u = time_ordered_unitary(PiecewiseHamiltonian({{0.9, h}}));
  PureState a(q, random_state_vector(4, rng));
  PureState b(q, random_state_vector(4, rng));
  Complex before = inner_product(a, b);
  Complex after = inner_product(u.apply(a), u.apply(b));
  REQUIRE(std::abs(before - after) < 1e-12);
}

TEST_CASE("non-Hermitian generators are rejected") {
  SubsystemLayout q = qubit("s");
  Matrix bad(2, 2);
  bad << 0, 1, 2, 0;
  OperatorMatrix op(q, bad);
  REQUIRE_THROWS_AS(PiecewiseHamiltonian({{1.0, op}}), std::invalid_argument);
  REQUIRE_THROWS_AS(hermitian_propagator(op, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(PiecewiseHamiltonian({{-1.0, OperatorMatrix(q, pauli_x())}}),
                    std::invalid_argument);
}
