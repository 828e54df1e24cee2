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

#include "qfb/cq.hpp"
#include "qfb/random.hpp"

using namespace qfb;

namespace {

DensityMatrix basis_state(const std::string& label, int d, int i) {
  Matrix m = Matrix::Zero(d, d);
  m(i, i) = 1.0;
  return DensityMatrix{SystemLayout({{label, d}}), m};
}

DensityMatrix maximally_mixed(const std::string& label, int d) {
  return DensityMatrix{SystemLayout({{label, d}}), Matrix::Identity(d, d) / static_cast<double>(d)};
}

// Perfectly correlated classical bits, as a register-only ensemble.
CQEnsemble correlated_bits(const std::string& w, const std::string& what, int m) {
  CQEnsemble e;
  e.registers = {{w, m}, {what, m}};
  Matrix one(1, 1);
  one(0, 0) = 1.0;
  for (int i = 0; i < m; ++i)
    e.branches.emplace(std::vector<int>{i, i}, CQBranch{1.0 / m, DensityMatrix{SystemLayout{}, one}});
  return e;
}

// W uniform and the quantum factor carrying |w> in a rotated basis.
CQEnsemble classical_copy_in_basis(double angle) {
  CQEnsemble e;
  e.registers = {{"W", 2}};
  const SystemLayout layout({{"C", 2}});
  for (int w = 0; w < 2; ++w) {
    Vector v(2);
    if (w == 0)
      v << std::cos(angle), std::sin(angle);
    else
      v << -std::sin(angle), std::cos(angle);
    e.branches.emplace(std::vector<int>{w}, CQBranch{0.5, PureState{layout, v}.to_density()});
  }
  return e;
}

CQEnsemble random_pure_ensemble(Rng& rng, int w_size, int f_size, const SystemLayout& layout) {
  CQEnsemble e;
  e.registers = {{"W", w_size}, {"F", f_size}};
  const std::vector<double> p = rng.dirichlet_uniform(w_size * f_size);
  int i = 0;
  for (int w = 0; w < w_size; ++w)
    for (int f = 0; f < f_size; ++f)
      e.branches.emplace(std::vector<int>{w, f}, CQBranch{p[i++], rng.random_pure(layout).to_density()});
  return e;
}

// Random instrument on dim_in with `outcomes` outcomes and `ops_per_outcome`
// operators each, built from a Haar isometry so the sum map is a channel.
Instrument random_instrument(Rng& rng, int dim_in, int dim_out, int outcomes, int ops_per_outcome) {
  const int total = outcomes * ops_per_outcome;
  const Matrix v = rng.haar_isometry(dim_out * total, dim_in);
  Instrument inst;
  inst.dim_in = dim_in;
  inst.dim_out = dim_out;
  for (int j = 0; j < outcomes; ++j) {
    Instrument::Outcome o;
    o.label = std::to_string(j);
    for (int t = 0; t < ops_per_outcome; ++t) {
      const int op_index = j * ops_per_outcome + t;
      Matrix k(dim_out, dim_in);
      for (int b = 0; b < dim_out; ++b) k.row(b) = v.row(b * total + op_index);
      o.kraus.push_back(std::move(k));
    }
    inst.outcomes.push_back(std::move(o));
  }
  return inst;
}

OneWayLOCC random_1wlocc(Rng& rng, int dim_a, int dim_b, int outcomes) {
  OneWayLOCC m;
  const Matrix w = rng.haar_isometry(dim_b * outcomes, dim_b);
  for (int x = 0; x < outcomes; ++x) {
    OneWayLOCC::Outcome o;
    o.label = std::to_string(x);
    o.sender_isometry = rng.haar_unitary(dim_a);
    Matrix v(dim_b, dim_b);
    for (int b = 0; b < dim_b; ++b) v.row(b) = w.row(b * outcomes + x);
    o.receiver_op = std::move(v);
    m.outcomes.push_back(std::move(o));
  }
  return m;
}

} // namespace

TEST_CASE("mutual information of correlated and product ensembles") {
  const CQEnsemble phi = correlated_bits("W", "Wh", 2);
  phi.validate();
  CHECK(mutual_information(phi, {"W"}, {"Wh"}) == doctest::Approx(1.0));

  // product ensemble: W uniform, quantum state independent of W
  CQEnsemble prod;
  prod.registers = {{"W", 2}};
  prod.branches.emplace(std::vector<int>{0}, CQBranch{0.5, maximally_mixed("C", 2)});
  prod.branches.emplace(std::vector<int>{1}, CQBranch{0.5, maximally_mixed("C", 2)});
  CHECK(mutual_information(prod, {"W"}, {"C"}) == doctest::Approx(0.0));

  CHECK_THROWS_AS(mutual_information(phi, {"W"}, {"W"}), std::invalid_argument);
}

TEST_CASE("mutual information of orthogonal conditional states is 1 bit") {
  for (double angle : {0.0, M_PI / 4, 0.61}) {
    const CQEnsemble e = classical_copy_in_basis(angle);
    // oracle: flatten to the 4x4 block-diagonal state and use entropies
    const DensityMatrix tau = flatten(e);
    const double s_w = von_neumann_entropy(reduce_to(tau, {"W"}));
    const double s_c = von_neumann_entropy(reduce_to(tau, {"C"}));
    const double s_wc = von_neumann_entropy(tau);
    CHECK(mutual_information(e, {"W"}, {"C"}) == doctest::Approx(s_w + s_c - s_wc).epsilon(1e-10));
    CHECK(mutual_information(e, {"W"}, {"C"}) == doctest::Approx(1.0));
  }
}

TEST_CASE("conditional entropy") {
  Rng rng(3);
  // all conditional states pure -> 0
  CQEnsemble pure;
  pure.registers = {{"F", 2}};
  pure.branches.emplace(std::vector<int>{0}, CQBranch{0.5, rng.random_pure(SystemLayout({{"C", 2}})).to_density()});
  pure.branches.emplace(std::vector<int>{1}, CQBranch{0.5, rng.random_pure(SystemLayout({{"C", 2}})).to_density()});
  CHECK(conditional_entropy(pure, {"C"}, {"F"}) == doctest::Approx(0.0));

  // all conditionals maximally mixed -> 1
  CQEnsemble mixed;
  mixed.registers = {{"F", 2}};
  mixed.branches.emplace(std::vector<int>{0}, CQBranch{0.5, maximally_mixed("C", 2)});
  mixed.branches.emplace(std::vector<int>{1}, CQBranch{0.5, maximally_mixed("C", 2)});
  CHECK(conditional_entropy(mixed, {"C"}, {"F"}) == doctest::Approx(1.0));

  // p = (1/2, 1/2), states {I/2, |0><0|} -> 0.5
  CQEnsemble half;
  half.registers = {{"F", 2}};
  half.branches.emplace(std::vector<int>{0}, CQBranch{0.5, maximally_mixed("C", 2)});
  half.branches.emplace(std::vector<int>{1}, CQBranch{0.5, basis_state("C", 2, 0)});
  CHECK(conditional_entropy(half, {"C"}, {"F"}) == doctest::Approx(0.5));

  CHECK_THROWS_AS(conditional_entropy(half, {"F"}, {}), std::invalid_argument);
}

TEST_CASE("monotone") {
  Rng rng(5);
  // no W-correlation, pure conditionals: both terms vanish
  CQEnsemble init;
  init.registers = {{"W", 2}, {"F", 2}};
  const PureState shared0 = rng.random_pure(SystemLayout({{"C", 2}}));
  const PureState shared1 = rng.random_pure(SystemLayout({{"C", 2}}));
  for (int w = 0; w < 2; ++w) {
    init.branches.emplace(std::vector<int>{w, 0}, CQBranch{0.3, shared0.to_density()});
    init.branches.emplace(std::vector<int>{w, 1}, CQBranch{0.2, shared1.to_density()});
  }
  CHECK(monotone(init, "W", {"F"}, {"C"}) == doctest::Approx(0.0));

  // W uniform M=2, F trivial, C = |w><w|: 1 + 0
  CQEnsemble copy;
  copy.registers = {{"W", 2}};
  copy.branches.emplace(std::vector<int>{0}, CQBranch{0.5, basis_state("C", 2, 0)});
  copy.branches.emplace(std::vector<int>{1}, CQBranch{0.5, basis_state("C", 2, 1)});
  CHECK(monotone(copy, "W", {}, {"C"}) == doctest::Approx(1.0));

  // W trivial, C = I/2: 0 + 1, with the zero exact by construction
  CQEnsemble triv;
  triv.registers = {{"W", 1}};
  triv.branches.emplace(std::vector<int>{0}, CQBranch{1.0, maximally_mixed("C", 2)});
  CHECK(mutual_information(triv, {"W"}, {"C"}) == 0.0);
  CHECK(monotone(triv, "W", {}, {"C"}) == doctest::Approx(1.0));
}

TEST_CASE("apply_instrument basics") {
  // trivial instrument: single outcome, identity map
  Instrument trivial;
  trivial.dim_in = trivial.dim_out = 2;
  trivial.outcomes.push_back({"0", {Matrix::Identity(2, 2)}});
  trivial.validate();

  CQEnsemble e = CQEnsemble::from_state(maximally_mixed("C", 2));
  const CQEnsemble out = apply_instrument(trivial, e, {"C"}, "X");
  CHECK(out.registers.size() == 1);
  CHECK(out.branches.size() == 1);
  CHECK(out.branches.begin()->second.prob == doctest::Approx(1.0));
  CHECK((out.branches.begin()->second.state.mat - Matrix::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff() < 1e-12);

  // computational-basis measurement of |+>
  Instrument meas;
  meas.dim_in = meas.dim_out = 2;
  for (int i = 0; i < 2; ++i) {
    Matrix proj = Matrix::Zero(2, 2);
    proj(i, i) = 1.0;
    meas.outcomes.push_back({std::to_string(i), {proj}});
  }
  Vector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const CQEnsemble plus_e = CQEnsemble::from_state(PureState{SystemLayout({{"C", 2}}), plus}.to_density());
  const CQEnsemble measured = apply_instrument(meas, plus_e, {"C"}, "X");
  CHECK(measured.branches.size() == 2);
  for (const auto& [label, b] : measured.branches) CHECK(b.prob == doctest::Approx(0.5));

  // random instruments keep total probability 1
  for (int trial = 0; trial < 30; ++trial) {
    Rng trng(mix_seed(17, trial));
    const Instrument inst = random_instrument(trng, 4, 3, 2, 2);
    inst.validate();
    CQEnsemble in = CQEnsemble::from_state(trng.random_density(SystemLayout({{"C", 4}}), 3));
    const CQEnsemble res = apply_instrument(inst, in, {"C"}, "X");
    CHECK(res.total_prob() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("apply_1wlocc basics") {
  // single outcome, identities
  OneWayLOCC id;
  id.outcomes.push_back({"0", Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  id.validate();
  Vector bell(4);
  bell << 1 / std::sqrt(2.0), 0, 0, 1 / std::sqrt(2.0);
  const CQEnsemble phi = CQEnsemble::from_state(PureState{SystemLayout({{"A", 2}, {"B", 2}}), bell}.to_density());
  const CQEnsemble same = apply_1wlocc(id, phi, {"A"}, {"B"}, "X");
  CHECK(same.branches.size() == 1);
  CHECK((same.branches.begin()->second.state.mat - phi.branches.begin()->second.state.mat).cwiseAbs().maxCoeff() <
        1e-12);

  // basis projectors on B of a Bell pair: uniform outcomes, product conditionals
  OneWayLOCC proj;
  for (int x = 0; x < 2; ++x) {
    Matrix p = Matrix::Zero(2, 2);
    p(x, x) = 1.0;
    proj.outcomes.push_back({std::to_string(x), Matrix::Identity(2, 2), p});
  }
  proj.validate();
  const CQEnsemble collapsed = apply_1wlocc(proj, phi, {"A"}, {"B"}, "X");
  CHECK(collapsed.branches.size() == 2);
  for (const auto& [label, b] : collapsed.branches) {
    CHECK(b.prob == doctest::Approx(0.5));
    CHECK(purity(b.state) == doctest::Approx(1.0));
    // conditional state is |xx><xx|: the A marginal is pure
    CHECK(von_neumann_entropy(reduce_to(b.state, {"A"})) == doctest::Approx(0.0));
  }

  // non-pure conditionals are rejected
  const CQEnsemble mixed = CQEnsemble::from_state(tensor(maximally_mixed("A", 2), maximally_mixed("B", 2)));
  CHECK_THROWS_AS(apply_1wlocc(id, mixed, {"A"}, {"B"}, "X"), std::invalid_argument);

  // random 1W-LOCC on random pure inputs: output is a valid ensemble with pure conditionals
  for (int trial = 0; trial < 30; ++trial) {
    Rng trng(mix_seed(23, trial));
    const OneWayLOCC m = random_1wlocc(trng, 3, 2, 2);
    m.validate();
    const CQEnsemble in = CQEnsemble::from_state(trng.random_pure(SystemLayout({{"A", 3}, {"B", 2}})).to_density());
    const CQEnsemble out = apply_1wlocc(m, in, {"A"}, {"B"}, "X");
    out.validate();
    for (const auto& [label, b] : out.branches) CHECK(purity(b.state) >= 1.0 - tol().eq);
  }
}

TEST_CASE("flatten") {
  Rng rng(13);
  // register-free ensemble flattens to its own state
  const DensityMatrix rho = rng.random_density(SystemLayout({{"C", 3}}), 2);
  const CQEnsemble bare = CQEnsemble::from_state(rho);
  CHECK((flatten(bare).mat - rho.mat).cwiseAbs().maxCoeff() == 0.0);

  // correlated bits flatten to diag(1/2, 0, 0, 1/2)
  const DensityMatrix phi = flatten(correlated_bits("W", "Wh", 2));
  CHECK(phi.mat(0, 0).real() == doctest::Approx(0.5));
  CHECK(phi.mat(3, 3).real() == doctest::Approx(0.5));
  CHECK(std::abs(phi.mat(1, 1)) + std::abs(phi.mat(2, 2)) < 1e-15);

  // S(flatten) = H(p) + sum p S(tau), the joint-entropy decomposition
  for (int trial = 0; trial < 20; ++trial) {
    Rng trng(mix_seed(29, trial));
    CQEnsemble e;
    e.registers = {{"W", 2}, {"F", 2}};
    const std::vector<double> p = trng.dirichlet_uniform(4);
    int i = 0;
    for (int w = 0; w < 2; ++w)
      for (int f = 0; f < 2; ++f)
        e.branches.emplace(std::vector<int>{w, f}, CQBranch{p[i++], trng.random_density(SystemLayout({{"C", 2}}), 2)});
    double oracle = entropy_of_probs(p);
    for (const auto& [label, b] : e.branches) oracle += b.prob * von_neumann_entropy(b.state);
    CHECK(von_neumann_entropy(flatten(e)) == doctest::Approx(oracle).epsilon(1e-8));
  }
}

TEST_CASE("flatten-form and ensemble-form entropics agree") {
  for (int trial = 0; trial < 20; ++trial) {
    Rng trng(mix_seed(37, trial));
    const CQEnsemble e = random_pure_ensemble(trng, 2, 2, SystemLayout({{"C", 2}, {"D", 2}}));
    const DensityMatrix tau = flatten(e);

    const double mi_e = mutual_information(e, {"W"}, {"C", "F"});
    const double mi_f = von_neumann_entropy(reduce_to(tau, {"W"})) +
                        von_neumann_entropy(reduce_to(tau, {"F", "C"})) -
                        von_neumann_entropy(reduce_to(tau, {"W", "F", "C"}));
    CHECK(mi_e == doctest::Approx(mi_f).epsilon(1e-9));

    const double ce_e = conditional_entropy(e, {"C"}, {"W", "F"});
    const double ce_f = von_neumann_entropy(reduce_to(tau, {"W", "F", "C"})) -
                        von_neumann_entropy(reduce_to(tau, {"W", "F"}));
    CHECK(ce_e == doctest::Approx(ce_f).epsilon(1e-9));

    const double mono_e = monotone(e, "W", {"F"}, {"C"});
    CHECK(mono_e == doctest::Approx(mi_f + ce_f).epsilon(1e-9));
  }
}

TEST_CASE("monotone stays within the safety envelope") {
  for (int trial = 0; trial < 50; ++trial) {
    Rng trng(mix_seed(41, trial));
    const int w = trng.uniform_int(2, 3);
    const int f = trng.uniform_int(1, 2);
    const CQEnsemble e = random_pure_ensemble(trng, w, f, SystemLayout({{"C", 2}, {"D", 2}}));
    const double m = monotone(e, "W", {"F"}, {"C", "D"});
    CHECK(m >= 0.0);
    CHECK(m <= std::log2(static_cast<double>(w)) + 2.0 + tol().eq);
  }
}

TEST_CASE("data processing: instruments on the quantum side cannot increase mutual information") {
  for (int trial = 0; trial < 500; ++trial) {
    Rng trng(mix_seed(43, trial));
    CQEnsemble e;
    e.registers = {{"W", trng.uniform_int(2, 3)}};
    const SystemLayout layout({{"C", 2}});
    const std::vector<double> p = trng.dirichlet_uniform(e.registers[0].size);
    for (int w = 0; w < e.registers[0].size; ++w)
      e.branches.emplace(std::vector<int>{w},
                         CQBranch{p[static_cast<size_t>(w)], trng.random_density(layout, trng.uniform_int(1, 2))});
    const double before = mutual_information(e, {"W"}, {"C"});
    const Instrument inst = random_instrument(trng, 2, 2, 2, 1);
    const CQEnsemble after = apply_instrument(inst, e, {"C"}, "X");
    const double after_mi = mutual_information(after, {"W"}, {"C", "X"});
    CHECK(after_mi <= before + tol().ineq);
  }
}
