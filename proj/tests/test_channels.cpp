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

#include "qfb/channels.hpp"
#include "qfb/random.hpp"

using namespace qfb;

namespace {

DensityMatrix single(const std::string& label, const Matrix& m) {
  return DensityMatrix{SystemLayout({{label, static_cast<int>(m.rows())}}), m};
}

DensityMatrix maximally_mixed(const std::string& label, int d) {
  return single(label, Matrix::Identity(d, d) / static_cast<double>(d));
}

// Oracle: apply a channel by summing K rho K^dag directly on the bare matrix.
Matrix kraus_sum(const KrausChannel& ch, const Matrix& rho) {
  Matrix out = Matrix::Zero(ch.dim_out, ch.dim_out);
  for (const auto& k : ch.kraus) out += k * rho * k.adjoint();
  return out;
}

} // namespace

TEST_CASE("erasure channel endpoints") {
  Rng rng(5);
  const DensityMatrix rho = rng.random_density(SystemLayout({{"A", 2}}), 2);

  const ChannelMixture none = make_erasure(2, 0.0);
  none.validate();
  const DensityMatrix out0 = apply(none, rho, "A");
  CHECK(out0.layout.dim_of("A") == 3);
  CHECK((out0.mat.topLeftCorner(2, 2) - rho.mat).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(out0.mat(2, 2)) < 1e-12);

  const ChannelMixture full = make_erasure(2, 1.0);
  const DensityMatrix out1 = apply(full, rho, "A");
  CHECK(out1.mat(2, 2).real() == doctest::Approx(1.0));
  CHECK(out1.mat.topLeftCorner(2, 2).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(make_erasure(2, 1.5), std::invalid_argument);
}

TEST_CASE("erasure flattening matches the weighted mixture") {
  const ChannelMixture mix = make_erasure(2, 0.25);
  const KrausChannel flat = mix.flatten();
  flat.validate();

  const DensityMatrix out = apply(flat, maximally_mixed("A", 2), "A");
  CHECK(out.mat(0, 0).real() == doctest::Approx(0.375));
  CHECK(out.mat(1, 1).real() == doctest::Approx(0.375));
  CHECK(out.mat(2, 2).real() == doctest::Approx(0.25));

  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const DensityMatrix rho = rng.random_density(SystemLayout({{"A", 2}}), 2);
    Matrix weighted = Matrix::Zero(3, 3);
    for (size_t x = 0; x < mix.components.size(); ++x)
      weighted += mix.weights[x] * kraus_sum(mix.components[x], rho.mat);
    CHECK((apply(flat, rho, "A").mat - weighted).cwiseAbs().maxCoeff() < tol().eq);
  }
}

TEST_CASE("depolarizing channel against explicit Kraus sum") {
  Matrix zero = Matrix::Zero(2, 2);
  zero(0, 0) = 1.0;
  for (double q : {0.0, 0.3, 0.5, 1.0}) {
    const KrausChannel ch = make_depolarizing(2, q);
    ch.validate();
    const Matrix out = kraus_sum(ch, zero);
    CHECK(out(0, 0).real() == doctest::Approx(1.0 - q / 2));
    CHECK(out(1, 1).real() == doctest::Approx(q / 2));
    CHECK((apply(ch, single("A", zero), "A").mat - out).cwiseAbs().maxCoeff() < 1e-12);
  }
  // qutrit depolarizing maps the computational state to the right mixture
  const KrausChannel ch3 = make_depolarizing(3, 0.6);
  ch3.validate();
  Matrix zero3 = Matrix::Zero(3, 3);
  zero3(0, 0) = 1.0;
  const Matrix out3 = kraus_sum(ch3, zero3);
  CHECK(out3(0, 0).real() == doctest::Approx(0.4 + 0.2));
  CHECK(out3(1, 1).real() == doctest::Approx(0.2));
}

TEST_CASE("named channels") {
  Rng rng(123);
  const DensityMatrix rho = rng.random_density(SystemLayout({{"A", 3}}), 3);
  CHECK((apply(make_named("identity", {3}), rho, "A").mat - rho.mat).cwiseAbs().maxCoeff() < 1e-14);

  const KrausChannel ad = make_named("amplitude_damping", {1.0});
  const DensityMatrix q = rng.random_density(SystemLayout({{"A", 2}}), 2);
  const DensityMatrix damped = apply(ad, q, "A");
  CHECK(damped.mat(0, 0).real() == doctest::Approx(1.0));

  const KrausChannel lossless = make_named("truncated_pure_loss", {1.0, 10});
  CHECK(lossless.dim_in == 11);
  CHECK(lossless.kraus.size() == 1);
  CHECK((lossless.kraus[0] - Matrix::Identity(11, 11)).cwiseAbs().maxCoeff() < 1e-14);

  const KrausChannel deph = make_named("dephasing", {0.5});
  deph.validate();

  CHECK_THROWS_AS(make_named("teleport", {}), std::invalid_argument);
  CHECK_THROWS_AS(make_named("truncated_pure_loss", {1.5, 10}), std::invalid_argument);
}

TEST_CASE("pure loss Kraus structure and trace preservation") {
  const KrausChannel ch = make_truncated_pure_loss(0.7, 8);
  ch.validate(); // exactly TP on the truncated space
  for (size_t k = 0; k < ch.kraus.size(); ++k)
    for (int m = 0; m < ch.dim_out; ++m)
      for (int n = 0; n < ch.dim_in; ++n)
        if (m != n - static_cast<int>(k)) CHECK(std::abs(ch.kraus[k](m, n)) == 0.0);
}

TEST_CASE("pure loss scales photon number by eta on low-lying inputs") {
  const int cutoff = 12;
  const double eta = 0.6;
  const KrausChannel ch = make_truncated_pure_loss(eta, cutoff);
  const HermitianObservable num = number_operator(cutoff + 1);
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    // support below cutoff/2 so there are no truncation effects at all
    Matrix block = Matrix::Zero(cutoff + 1, cutoff + 1);
    const int s = cutoff / 2;
    const Matrix g = rng.ginibre(s, s);
    block.topLeftCorner(s, s) = g * g.adjoint();
    block /= block.trace().real();
    const DensityMatrix rho = single("A", block);
    const double in_n = expectation(rho, num);
    const DensityMatrix out = apply(ch, rho, "A");
    const double out_n = expectation(DensityMatrix{rho.layout, out.mat}, num);
    CHECK(out_n == doctest::Approx(eta * in_n).epsilon(1e-10));
  }
}

TEST_CASE("stinespring dilation") {
  const IsometricDilation id_dil = stinespring(make_identity(2));
  CHECK(id_dil.dim_env == 1);
  CHECK((id_dil.isometry - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);

  const KrausChannel er = make_erasure(2, 0.3).flatten();
  CHECK(stinespring(er).dim_env == static_cast<int>(er.kraus.size()));

  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const KrausChannel ch = random_channel(2, 3, 2, mix_seed(100, trial));
    const IsometricDilation dil = stinespring(ch);
    CHECK(dil.isometry_defect() < tol().tp);
    const DensityMatrix rho = rng.random_density(SystemLayout({{"A", 2}}), 2);
    // conjugate by V, then trace out the environment
    const Matrix big = dil.isometry * rho.mat * dil.isometry.adjoint();
    const DensityMatrix joint{SystemLayout({{"B", 3}, {"E", dil.dim_env}}), big};
    const DensityMatrix back = partial_trace(joint, {"E"});
    CHECK((back.mat - apply(ch, rho, "A").mat).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("adjoint channel") {
  const KrausChannel ch = random_channel(3, 2, 2, 42);
  const HermitianObservable ident{SystemLayout({{"B", 2}}), Matrix::Identity(2, 2)};
  const HermitianObservable back = adjoint_apply(ch, ident);
  CHECK((back.mat - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < tol().tp);

  Rng rng(21);
  const Matrix gm0 = rng.ginibre(2, 2);
  const HermitianObservable g{SystemLayout({{"B", 2}}), Matrix(gm0 + gm0.adjoint())};
  CHECK((adjoint_apply(make_identity(2), g).mat - g.mat).cwiseAbs().maxCoeff() < 1e-15);

  for (int trial = 0; trial < 50; ++trial) {
    const KrausChannel c = random_channel(2, 2, 2, mix_seed(7, trial));
    const DensityMatrix rho = rng.random_density(SystemLayout({{"A", 2}}), 2);
    const Matrix gm = rng.ginibre(2, 2);
    const HermitianObservable obs{SystemLayout({{"B", 2}}), Matrix(gm + gm.adjoint())};
    const double lhs = (obs.mat * apply(c, rho, "A").mat).trace().real();
    const double rhs = (adjoint_apply(c, obs).mat * rho.mat).trace().real();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("random channels are reproducible and trace preserving") {
  const KrausChannel a = random_channel(2, 2, 3, 2024);
  const KrausChannel b = random_channel(2, 2, 3, 2024);
  REQUIRE(a.kraus.size() == b.kraus.size());
  for (size_t i = 0; i < a.kraus.size(); ++i) CHECK((a.kraus[i] - b.kraus[i]).cwiseAbs().maxCoeff() == 0.0);

  for (int trial = 0; trial < 100; ++trial) {
    const KrausChannel ch = random_channel(3, 2, 4, mix_seed(555, trial));
    CHECK(ch.tp_defect() < 1e-10);
  }

  // dim_env = 1 gives a unitary channel when dims match
  const KrausChannel u = random_channel(3, 3, 1, 9);
  CHECK(u.kraus.size() == 1);
  CHECK((u.kraus[0].adjoint() * u.kraus[0] - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(random_channel(4, 2, 1, 0), std::invalid_argument);
}

TEST_CASE("apply preserves trace and PSD across the fleet") {
  Rng rng(31);
  std::vector<KrausChannel> fleet = {make_identity(2),
                                     make_depolarizing(2, 0.4),
                                     make_dephasing(0.2),
                                     make_amplitude_damping(0.5),
                                     make_erasure(2, 0.25).flatten(),
                                     random_channel(2, 3, 2, 808)};
  for (const auto& ch : fleet) {
    for (int trial = 0; trial < 5; ++trial) {
      const DensityMatrix rho = rng.random_density(SystemLayout({{"A", ch.dim_in}}), ch.dim_in);
      const DensityMatrix out = apply(ch, rho, "A");
      CHECK(out.mat.trace().real() == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(eigh(out.mat).eigenvalues.minCoeff() > -tol().psd);
    }
  }
}

TEST_CASE("apply acts as identity on spectator factors") {
  Rng rng(33);
  const KrausChannel ch = make_amplitude_damping(0.35);
  const SystemLayout layout({{"X", 3}, {"A", 2}});
  const DensityMatrix rho = rng.random_density(layout, 4);
  const DensityMatrix out = apply(ch, rho, "A");
  CHECK(out.layout == layout);
  CHECK((partial_trace(out, {"A"}).mat - partial_trace(rho, {"A"}).mat).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((partial_trace(out, {"X"}).mat - kraus_sum(ch, partial_trace(rho, {"X"}).mat)).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(apply(ch, rng.random_density(SystemLayout({{"A", 3}}), 3), "A"), std::invalid_argument);
}
