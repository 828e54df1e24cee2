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

#include "qfb/channels.hpp"

#include <cmath>
#include <stdexcept>

#include "qfb/random.hpp"

namespace qfb {

double KrausChannel::tp_defect() const {
  Matrix acc = Matrix::Zero(dim_in, dim_in);
  for (const auto& k : kraus) acc += k.adjoint() * k;
  return (acc - Matrix::Identity(dim_in, dim_in)).cwiseAbs().maxCoeff();
}

void KrausChannel::validate() const {
  if (dim_in < 1 || dim_out < 1) throw std::invalid_argument("channel dimensions must be positive");
  if (kraus.empty()) throw std::invalid_argument("channel has no Kraus operators");
  for (const auto& k : kraus)
    if (k.rows() != dim_out || k.cols() != dim_in)
      throw std::invalid_argument("Kraus operator shape " + std::to_string(k.rows()) + "x" +
                                  std::to_string(k.cols()) + " does not match channel dims");
  const double defect = tp_defect();
  if (defect > tol().tp)
    throw std::invalid_argument("channel is not trace preserving, defect " + std::to_string(defect));
}

int ChannelMixture::dim_in() const { return components.empty() ? 0 : components.front().dim_in; }
int ChannelMixture::dim_out() const { return components.empty() ? 0 : components.front().dim_out; }

void ChannelMixture::validate() const {
  if (components.empty() || weights.size() != components.size())
    throw std::invalid_argument("mixture needs matching weights and components");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0) throw std::invalid_argument("mixture weight is negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > tol().tr) throw std::invalid_argument("mixture weights do not sum to 1");
  for (const auto& c : components) {
    c.validate();
    if (c.dim_in != dim_in() || c.dim_out != dim_out())
      throw std::invalid_argument("mixture components must share dimensions");
  }
}

KrausChannel ChannelMixture::flatten() const {
  KrausChannel out{dim_in(), dim_out(), {}};
  for (size_t x = 0; x < components.size(); ++x) {
    const double root = std::sqrt(weights[x]);
    if (root == 0.0) continue;
    for (const auto& k : components[x].kraus) out.kraus.push_back(root * k);
  }
  return out;
}

double IsometricDilation::isometry_defect() const {
  return (isometry.adjoint() * isometry - Matrix::Identity(isometry.cols(), isometry.cols())).cwiseAbs().maxCoeff();
}

DensityMatrix apply(const KrausChannel& ch, const DensityMatrix& rho, const std::string& on) {
  if (rho.layout.dim_of(on) != ch.dim_in)
    throw std::invalid_argument("factor '" + on + "' has dim " + std::to_string(rho.layout.dim_of(on)) +
                                ", channel expects " + std::to_string(ch.dim_in));
  const std::vector<Factor> out_factor = {{on, ch.dim_out}};
  Matrix acc;
  SystemLayout out_layout;
  bool first = true;
  for (const auto& k : ch.kraus) {
    const LiftedOperator lifted = lift_operator(rho.layout, {on}, k, out_factor);
    const Matrix term = lifted.mat * rho.mat * lifted.mat.adjoint();
    if (first) {
      acc = term;
      out_layout = lifted.layout;
      first = false;
    } else {
      acc += term;
    }
  }
  return DensityMatrix{out_layout, std::move(acc)};
}

DensityMatrix apply(const ChannelMixture& mix, const DensityMatrix& rho, const std::string& on) {
  return apply(mix.flatten(), rho, on);
}

IsometricDilation stinespring(const KrausChannel& ch) {
  const int env = static_cast<int>(ch.kraus.size());
  Matrix v = Matrix::Zero(ch.dim_out * env, ch.dim_in);
  for (int e = 0; e < env; ++e)
    for (int b = 0; b < ch.dim_out; ++b) v.row(b * env + e) = ch.kraus[static_cast<size_t>(e)].row(b);
  return IsometricDilation{std::move(v), env};
}

HermitianObservable adjoint_apply(const KrausChannel& ch, const HermitianObservable& g) {
  if (g.dim() != ch.dim_out)
    throw std::invalid_argument("observable dim " + std::to_string(g.dim()) + " does not match channel output " +
                                std::to_string(ch.dim_out));
  Matrix acc = Matrix::Zero(ch.dim_in, ch.dim_in);
  for (const auto& k : ch.kraus) acc += k.adjoint() * g.mat * k;
  SystemLayout in_layout({{g.layout.size() == 1 ? g.layout.factor(0).label : std::string("A"), ch.dim_in}});
  return HermitianObservable{std::move(in_layout), std::move(acc)};
}

ChannelMixture make_erasure(int d, double p) {
  if (d < 2) throw std::invalid_argument("erasure channel needs d >= 2");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("erasure probability must lie in [0,1]");
  KrausChannel embed{d, d + 1, {}};
  Matrix k0 = Matrix::Zero(d + 1, d);
  k0.topRows(d) = Matrix::Identity(d, d);
  embed.kraus.push_back(std::move(k0));

  KrausChannel erase{d, d + 1, {}};
  for (int i = 0; i < d; ++i) {
    Matrix k = Matrix::Zero(d + 1, d);
    k(d, i) = 1.0;
    erase.kraus.push_back(std::move(k));
  }
  return ChannelMixture{{1.0 - p, p}, {std::move(embed), std::move(erase)}};
}

KrausChannel make_identity(int d) {
  if (d < 1) throw std::invalid_argument("identity channel needs d >= 1");
  return KrausChannel{d, d, {Matrix::Identity(d, d)}};
}

KrausChannel make_depolarizing(int d, double q) {
  if (d < 2) throw std::invalid_argument("depolarizing channel needs d >= 2");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("depolarizing strength must lie in [0,1]");
  // rho -> (1-q) rho + q I/d via the Heisenberg-Weyl twirl.
  KrausChannel ch{d, d, {}};
  if (q < 1.0) ch.kraus.push_back(std::sqrt(1.0 - q) * Matrix::Identity(d, d));
  if (q > 0.0) {
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        Matrix w = Matrix::Zero(d, d);
        for (int j = 0; j < d; ++j) w((j + a) % d, j) = std::exp(Complex(0, 2.0 * M_PI * j * b / d));
        ch.kraus.push_back((std::sqrt(q) / d) * w);
      }
  }
  return ch;
}

KrausChannel make_dephasing(double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("dephasing probability must lie in [0,1]");
  KrausChannel ch{2, 2, {}};
  if (p < 1.0) ch.kraus.push_back(std::sqrt(1.0 - p) * Matrix::Identity(2, 2));
  if (p > 0.0) {
    Matrix z = Matrix::Zero(2, 2);
    z(0, 0) = 1.0;
    z(1, 1) = -1.0;
    ch.kraus.push_back(std::sqrt(p) * z);
  }
  return ch;
}

KrausChannel make_amplitude_damping(double gamma) {
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("damping rate must lie in [0,1]");
  Matrix k0 = Matrix::Zero(2, 2);
  k0(0, 0) = 1.0;
  k0(1, 1) = std::sqrt(1.0 - gamma);
  Matrix k1 = Matrix::Zero(2, 2);
  k1(0, 1) = std::sqrt(gamma);
  KrausChannel ch{2, 2, {std::move(k0)}};
  if (gamma > 0.0) ch.kraus.push_back(std::move(k1));
  return ch;
}

KrausChannel make_truncated_pure_loss(double eta, int n_cutoff) {
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("transmissivity must lie in [0,1]");
  if (n_cutoff < 1) throw std::invalid_argument("Fock cutoff must be >= 1");
  const int d = n_cutoff + 1;
  KrausChannel ch{d, d, {}};
  for (int k = 0; k <= n_cutoff; ++k) {
    Matrix m = Matrix::Zero(d, d);
    bool nonzero = false;
    for (int n = k; n <= n_cutoff; ++n) {
      // <n-k| K_k |n> = sqrt( C(n,k) eta^(n-k) (1-eta)^k ), the beamsplitter
      // amplitude for losing k photons to the vacuum environment.
      double log_binom = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
      double amp2 = std::exp(log_binom) * std::pow(eta, n - k) * std::pow(1.0 - eta, k);
      if (amp2 > 0.0) nonzero = true;
      m(n - k, n) = std::sqrt(amp2);
    }
    if (nonzero) ch.kraus.push_back(std::move(m));
  }
  return ch;
}

KrausChannel make_named(const std::string& name, const std::vector<double>& params) {
  auto need = [&](size_t n) {
    if (params.size() != n)
      throw std::invalid_argument("channel '" + name + "' expects " + std::to_string(n) + " parameter(s)");
  };
  if (name == "identity") {
    need(1);
    return make_identity(static_cast<int>(params[0]));
  }
  if (name == "depolarizing") {
    need(2);
    return make_depolarizing(static_cast<int>(params[0]), params[1]);
  }
  if (name == "dephasing") {
    need(1);
    return make_dephasing(params[0]);
  }
  if (name == "amplitude_damping") {
    need(1);
    return make_amplitude_damping(params[0]);
  }
  if (name == "truncated_pure_loss") {
    need(2);
    return make_truncated_pure_loss(params[0], static_cast<int>(params[1]));
  }
  throw std::invalid_argument("unknown channel name '" + name + "'");
}

KrausChannel random_channel(int dim_in, int dim_out, int dim_env, uint64_t seed) {
  if (dim_in < 1 || dim_out < 1 || dim_env < 1) throw std::invalid_argument("channel dims must be >= 1");
  if (dim_out * dim_env < dim_in)
    throw std::invalid_argument("no trace-preserving channel with dim_out*dim_env < dim_in");
  Rng rng(seed);
  const Matrix v = rng.haar_isometry(dim_out * dim_env, dim_in);
  KrausChannel ch{dim_in, dim_out, {}};
  for (int e = 0; e < dim_env; ++e) {
    Matrix k(dim_out, dim_in);
    for (int b = 0; b < dim_out; ++b) k.row(b) = v.row(b * dim_env + e);
    ch.kraus.push_back(std::move(k));
  }
  return ch;
}

HermitianObservable number_operator(int dim) {
  Matrix h = Matrix::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) h(n, n) = n;
  return HermitianObservable{SystemLayout({{"A", dim}}), std::move(h)};
}

double fock_tail_mass(const DensityMatrix& rho) {
  return rho.mat(rho.dim() - 1, rho.dim() - 1).real();
}

} // namespace qfb
