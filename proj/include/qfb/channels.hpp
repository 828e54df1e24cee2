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

#ifndef QFB_CHANNELS_HPP
#define QFB_CHANNELS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "qfb/states.hpp"

namespace qfb {

// Completely positive trace-preserving map in Kraus form.
struct KrausChannel {
  int dim_in = 0;
  int dim_out = 0;
  std::vector<Matrix> kraus; // each dim_out x dim_in

  // max abs entry of sum_i K_i^dag K_i - I
  double tp_defect() const;
  void validate() const; // throws if the TP defect exceeds tol().tp
};

// Probabilistic mixture of channels sharing input/output dimensions.
struct ChannelMixture {
  std::vector<double> weights;
  std::vector<KrausChannel> components;

  int dim_in() const;
  int dim_out() const;
  void validate() const;
  // Single Kraus channel applying the mixture on average: union of sqrt(w_i) K.
  KrausChannel flatten() const;
};

// Isometric extension V = sum_i K_i (x) |i>_E of a Kraus channel. The output
// composite index orders the channel output before the environment.
struct IsometricDilation {
  Matrix isometry; // (dim_out * dim_env) x dim_in
  int dim_env = 0;

  double isometry_defect() const;
};

DensityMatrix apply(const KrausChannel& ch, const DensityMatrix& rho, const std::string& on);
DensityMatrix apply(const ChannelMixture& mix, const DensityMatrix& rho, const std::string& on);

IsometricDilation stinespring(const KrausChannel& ch);

HermitianObservable adjoint_apply(const KrausChannel& ch, const HermitianObservable& g);

// Erasure channel rho -> (1-p) rho + p |e><e| on a d-dimensional input; the
// erasure flag |e> is basis vector d of the (d+1)-dimensional output.
ChannelMixture make_erasure(int d, double p);

KrausChannel make_identity(int d);
KrausChannel make_depolarizing(int d, double q);
KrausChannel make_dephasing(double p);
KrausChannel make_amplitude_damping(double gamma);
// Beamsplitter of transmissivity eta with vacuum environment on the Fock
// space truncated at n_cutoff (dim n_cutoff+1). Kraus operator K_k moves
// photon number n -> n-k; trace preserving exactly on the truncated space.
KrausChannel make_truncated_pure_loss(double eta, int n_cutoff);

// name in {identity, depolarizing, dephasing, amplitude_damping,
// truncated_pure_loss}; params read positionally per constructor above.
KrausChannel make_named(const std::string& name, const std::vector<double>& params);

// Kraus operators sliced from a Haar-distributed isometry into
// dim_out (x) dim_env; requires dim_out * dim_env >= dim_in.
KrausChannel random_channel(int dim_in, int dim_out, int dim_env, uint64_t seed);

// diag(0, 1, ..., dim-1), the photon-number Hamiltonian on a truncated Fock space.
HermitianObservable number_operator(int dim);

// Population of the top Fock level, reported as a truncation-quality diagnostic.
double fock_tail_mass(const DensityMatrix& rho);

} // namespace qfb

#endif
