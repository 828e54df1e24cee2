// Copyright 2026 The qfb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qfb/random.hpp"
#include "qfb/states.hpp"

using namespace qfb;

namespace {

DensityMatrix maximally_mixed(const std::string& label, int d) {
  return DensityMatrix{SystemLayout({{label, d}}), Matrix::Identity(d, d) / static_cast<double>(d)};
}

DensityMatrix basis_state(const std::string& label, int d, int i) {
  Matrix m = Matrix::Zero(d, d);
  m(i, i) = 1.0;
  return DensityMatrix{SystemLayout({{label, d}}), m};
}

PureState bell_pair(const std::string& a, const std::string& b) {
  Vector v = Vector::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return PureState{SystemLayout({{a, 2}, {b, 2}}), v};
}

// Independent oracle: partial trace by direct index contraction on the full
// matrix, written without the library's stride machinery.
Matrix contract_last_of_three(const Matrix& m, int d0, int d1, int d2, int which) {
  auto idx = [&](int i, int j, int k) { return (i * d1 + j) * d2 + k; };
  if (which == 2) {
    Matrix out = Matrix::Zero(d0 * d1, d0 * d1);
    for (int i = 0; i < d0; ++i)
      for (int j = 0; j < d1; ++j)
        for (int i2 = 0; i2 < d0; ++i2)
          for (int j2 = 0; j2 < d1; ++j2)
            for (int k = 0; k < d2; ++k) out(i * d1 + j, i2 * d1 + j2) += m(idx(i, j, k), idx(i2, j2, k));
    return out;
  }
  Matrix out = Matrix::Zero(d1 * d2, d1 * d2);
  for (int j = 0; j < d1; ++j)
    for (int k = 0; k < d2; ++k)
      for (int j2 = 0; j2 < d1; ++j2)
        for (int k2 = 0; k2 < d2; ++k2)
          for (int i = 0; i < d0; ++i) out(j * d2 + k, j2 * d2 + k2) += m(idx(i, j, k), idx(i, j2, k2));
  return out;
}

} // namespace

TEST_CASE("tensor products") {
  const DensityMatrix ab = tensor(maximally_mixed("A", 2), maximally_mixed("B", 2));
  CHECK(ab.layout.total_dim() == 4);
  CHECK((ab.mat - Matrix::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  Vector zero(2), one(2);
  zero << 1, 0;
  one << 0, 1;
  const PureState p01 = tensor(PureState{SystemLayout({{"A", 2}}), zero}, PureState{SystemLayout({{"B", 2}}), one});
  CHECK(std::abs(p01.amp(1) - Complex(1, 0)) < 1e-15);
  CHECK(p01.amp.cwiseAbs().sum() == doctest::Approx(1.0));

  const DensityMatrix phi_c = tensor(bell_pair("A", "B").to_density(), basis_state("C", 2, 0));
  CHECK(phi_c.mat.trace().real() == doctest::Approx(1.0));

  CHECK_THROWS_AS(tensor(maximally_mixed("A", 2), maximally_mixed("A", 3)), std::invalid_argument);
}

TEST_CASE("partial trace") {
  const DensityMatrix bell = bell_pair("A", "B").to_density();
  const DensityMatrix marg = partial_trace(bell, {"B"});
  CHECK((marg.mat - Matrix::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(marg.layout.labels() == std::vector<std::string>{"A"});

  Rng rng(7);
  const DensityMatrix rho = rng.random_density(SystemLayout({{"A", 3}}), 2);
  const DensityMatrix sig = rng.random_density(SystemLayout({{"B", 2}}), 2);
  const DensityMatrix prod = tensor(rho, sig);
  CHECK((partial_trace(prod, {"B"}).mat - rho.mat).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(partial_trace(bell, {"Z"}), std::invalid_argument);
  CHECK_THROWS_AS(partial_trace(bell, {"A", "B"}), std::invalid_argument);
}

TEST_CASE("sequential partial traces match direct contraction") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const SystemLayout layout({{"A", 2}, {"B", 2}, {"C", 2}});
    const DensityMatrix rho = rng.random_density(layout, 8);
    const DensityMatrix via_lib = partial_trace(partial_trace(rho, {"A"}), {"B"});
    const Matrix no_a_first = contract_last_of_three(rho.mat, 2, 2, 2, 0); // trace A
    Matrix direct = Matrix::Zero(2, 2); // then trace B by hand
    for (int k = 0; k < 2; ++k)
      for (int k2 = 0; k2 < 2; ++k2)
        for (int j = 0; j < 2; ++j) direct(k, k2) += no_a_first(j * 2 + k, j * 2 + k2);
    CHECK((via_lib.mat - direct).cwiseAbs().maxCoeff() < 1e-12);

    // and in the other association: trace C first via the oracle
    const Matrix ab = contract_last_of_three(rho.mat, 2, 2, 2, 2);
    CHECK((partial_trace(rho, {"C"}).mat - ab).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("partial trace preserves trace and PSD") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const SystemLayout layout({{"A", 2}, {"B", 3}});
    const DensityMatrix rho = rng.random_density(layout, rng.uniform_int(1, 6));
    const DensityMatrix red = partial_trace(rho, {"B"});
    CHECK(red.mat.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    const EighResult es = eigh(red.mat);
    CHECK(es.eigenvalues.minCoeff() > -tol().psd);
  }
}

TEST_CASE("eigh basics") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.7;
  d(1, 1) = 0.3;
  const EighResult es = eigh(d);
  CHECK(es.eigenvalues(0) == doctest::Approx(0.7));
  CHECK(es.eigenvalues(1) == doctest::Approx(0.3));

  Matrix x = Matrix::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1.0;
  const EighResult ex = eigh(x);
  CHECK(ex.eigenvalues(0) == doctest::Approx(1.0));
  CHECK(ex.eigenvalues(1) == doctest::Approx(-1.0));

  Rng rng(3);
  const Matrix g = rng.ginibre(8, 8);
  const Matrix h = g + g.adjoint();
  const EighResult eh = eigh(h);
  const double resid = (eh.eigenvectors * eh.eigenvalues.asDiagonal() * eh.eigenvectors.adjoint() - h).norm();
  CHECK(resid < 1e-10 * std::max(1.0, h.norm()));

  Matrix nonherm = Matrix::Zero(2, 2);
  nonherm(0, 1) = 1.0;
  CHECK_THROWS_AS(eigh(nonherm), std::invalid_argument);
}

TEST_CASE("von Neumann entropy") {
  CHECK(von_neumann_entropy(maximally_mixed("A", 2)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(von_neumann_entropy(basis_state("A", 2, 0)) == doctest::Approx(0.0));

  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 0.75;
  m(1, 1) = 0.25;
  const double h2_quarter = -0.25 * std::log2(0.25) - 0.75 * std::log2(0.75);
  CHECK(von_neumann_entropy(DensityMatrix{SystemLayout({{"A", 2}}), m}) == doctest::Approx(h2_quarter).epsilon(1e-12));
  CHECK(h2_quarter == doctest::Approx(0.811278).epsilon(1e-5));
}

TEST_CASE("entropy bounds and unitary invariance") {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = rng.uniform_int(2, 6);
    const SystemLayout layout({{"A", d}});
    const DensityMatrix rho = rng.random_density(layout, rng.uniform_int(1, d));
    const double s = von_neumann_entropy(rho);
    CHECK(s >= 0.0);
    CHECK(s <= std::log2(static_cast<double>(d)) + 1e-12);
    const Matrix u = rng.haar_unitary(d);
    const DensityMatrix rotated{layout, u * rho.mat * u.adjoint()};
    CHECK(std::abs(von_neumann_entropy(rotated) - s) < tol().eq);
  }
}

TEST_CASE("entropy concavity spot check") {
  Rng rng(19);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = rng.uniform_int(2, 5);
    const SystemLayout layout({{"A", d}});
    const DensityMatrix rho = rng.random_density(layout, d);
    const DensityMatrix sig = rng.random_density(layout, d);
    const double lam = rng.uniform();
    const DensityMatrix mix{layout, lam * rho.mat + (1 - lam) * sig.mat};
    CHECK(von_neumann_entropy(mix) >=
          lam * von_neumann_entropy(rho) + (1 - lam) * von_neumann_entropy(sig) - tol().eq);
  }
}

TEST_CASE("purify") {
  const PureState p = purify(maximally_mixed("A", 2), "R");
  CHECK(p.layout.total_dim() == 4);
  const DensityMatrix back = partial_trace(p.to_density(), {"R"});
  CHECK((back.mat - Matrix::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff() < 1e-12);
  // maximally entangled: the reference marginal is also maximally mixed
  const DensityMatrix ref = partial_trace(p.to_density(), {"A"});
  CHECK((ref.mat - Matrix::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff() < 1e-12);

  // pure input: rank-1 reference, state unchanged up to phase
  Rng rng(23);
  const PureState psi = rng.random_pure(SystemLayout({{"A", 3}}));
  const PureState pp = purify(psi.to_density(), "R");
  CHECK(pp.layout.dim_of("R") == 1);
  CHECK(std::abs(std::abs((psi.amp.adjoint() * pp.amp.head(3))(0)) - 1.0) < 1e-10);

  CHECK_THROWS_AS(purify(maximally_mixed("A", 2), "A"), std::invalid_argument);
}

TEST_CASE("purify round trip on random states") {
  Rng rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = rng.uniform_int(2, 6);
    const int r = rng.uniform_int(1, d);
    const DensityMatrix rho = rng.random_density(SystemLayout({{"A", d}}), r);
    const PureState p = purify(rho, "R");
    const DensityMatrix back = partial_trace(p.to_density(), {"R"});
    CHECK((back.mat - rho.mat).cwiseAbs().maxCoeff() < 1e-10);
  }
  // rank-3 state on dim 4, as a pinned case
  const DensityMatrix rho = Rng(31).random_density(SystemLayout({{"A", 4}}), 3);
  CHECK(purify(rho, "R").layout.dim_of("R") == 3);
}

TEST_CASE("trace distance") {
  const DensityMatrix rho = Rng(37).random_density(SystemLayout({{"A", 3}}), 3);
  CHECK(trace_distance(rho, rho) == doctest::Approx(0.0));
  CHECK(trace_distance(basis_state("A", 2, 0), basis_state("A", 2, 1)) == doctest::Approx(1.0));
  CHECK(trace_distance(maximally_mixed("A", 2), basis_state("A", 2, 0)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(trace_distance(maximally_mixed("A", 2), maximally_mixed("B", 2)), std::invalid_argument);
}

TEST_CASE("trace distance is a metric") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = rng.uniform_int(2, 4);
    const SystemLayout layout({{"A", d}});
    const DensityMatrix a = rng.random_density(layout, d);
    const DensityMatrix b = rng.random_density(layout, d);
    const DensityMatrix c = rng.random_density(layout, d);
    CHECK(trace_distance(a, b) == doctest::Approx(trace_distance(b, a)));
    CHECK(trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + tol().eq);
    CHECK(trace_distance(a, b) >= 0.0);
    CHECK(trace_distance(a, b) <= 1.0 + tol().eq);
  }
}

TEST_CASE("expectation values") {
  Matrix z = Matrix::Zero(2, 2);
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  const HermitianObservable pauli_z{SystemLayout({{"A", 2}}), z};
  CHECK(expectation(maximally_mixed("A", 2), pauli_z) == doctest::Approx(0.0));

  Matrix n = Matrix::Zero(2, 2);
  n(1, 1) = 1.0;
  const HermitianObservable number{SystemLayout({{"A", 2}}), n};
  CHECK(expectation(basis_state("A", 2, 1), number) == doctest::Approx(1.0));

  Matrix th = Matrix::Zero(2, 2);
  th(0, 0) = 2.0 / 3.0;
  th(1, 1) = 1.0 / 3.0;
  CHECK(expectation(DensityMatrix{SystemLayout({{"A", 2}}), th}, number) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("lift_operator embeds with spectators, splits and merges") {
  Rng rng(43);
  const SystemLayout layout({{"A", 2}, {"B", 3}, {"C", 2}});
  const DensityMatrix rho = rng.random_density(layout, 5);

  // unitary on the non-adjacent pair (A, C); outputs land at A's slot
  const Matrix u = rng.haar_unitary(4);
  const LiftedOperator lifted = lift_operator(layout, {"A", "C"}, u, {{"A", 2}, {"C", 2}});
  CHECK(lifted.layout == SystemLayout({{"A", 2}, {"C", 2}, {"B", 3}}));
  const Matrix conj = lifted.mat * rho.mat * lifted.mat.adjoint();
  CHECK(conj.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
  // acting as identity on B: tracing out A,C gives the same B marginal
  const DensityMatrix after{lifted.layout, conj};
  CHECK((partial_trace(after, {"A", "C"}).mat - partial_trace(rho, {"A", "C"}).mat).cwiseAbs().maxCoeff() < 1e-12);

  // permuting back restores the original factor order and entries when u = I
  const LiftedOperator id_lift = lift_operator(layout, {"A", "C"}, Matrix::Identity(4, 4), {{"A", 2}, {"C", 2}});
  const DensityMatrix shuffled{id_lift.layout, id_lift.mat * rho.mat * id_lift.mat.adjoint()};
  const DensityMatrix restored = permute_factors(shuffled, {"A", "B", "C"});
  CHECK((restored.mat - rho.mat).cwiseAbs().maxCoeff() < 1e-14);

  // splitting a dim-2 factor into (2,1) and merging (B,C) back are identities
  const LiftedOperator split = lift_operator(layout, {"C"}, Matrix::Identity(2, 2), {{"C1", 2}, {"C2", 1}});
  CHECK(split.layout.total_dim() == 12);
  CHECK(split.layout.dim_of("C1") == 2);

  const LiftedOperator merge = lift_operator(layout, {"B", "C"}, Matrix::Identity(6, 6), {{"BC", 6}});
  const Matrix merged = merge.mat * rho.mat * merge.mat.adjoint();
  CHECK((merged - rho.mat).cwiseAbs().maxCoeff() < 1e-14);

  CHECK_THROWS_AS(lift_operator(layout, {"C", "A"}, u, {{"A", 2}, {"C", 2}}), std::invalid_argument);
}

TEST_CASE("validation catches broken inputs") {
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = Complex(0.5, 0.1);
  CHECK_THROWS_AS(DensityMatrix::validated(SystemLayout({{"A", 2}}), bad), std::invalid_argument);

  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(DensityMatrix::validated(SystemLayout({{"A", 2}}), neg), std::invalid_argument);

  CHECK_THROWS_AS(SystemLayout({{"A", 2}, {"A", 2}}), std::invalid_argument);
  CHECK_THROWS_AS(SystemLayout({{"A", 0}}), std::invalid_argument);
}
