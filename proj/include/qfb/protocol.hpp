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

#ifndef QFB_PROTOCOL_HPP
#define QFB_PROTOCOL_HPP

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "qfb/channels.hpp"
#include "qfb/cq.hpp"
#include "qfb/states.hpp"

namespace qfb {

// An n-round feedback-assisted classical communication protocol. Round i
// applies encoder i (conditioned on the previous feedback symbol), one channel
// use, and decoder i (except the last round, which applies the POVM).
struct ProtocolSpec {
  int n = 1;
  int M = 2;
  std::variant<KrausChannel, ChannelMixture> channel;
  std::vector<std::pair<double, DensityMatrix>> initial_bob; // f0 -> (prob, state on Bob memory)
  std::vector<DensityMatrix> codewords;                      // M states on Alice memory
  std::vector<KrausChannel> encoders;  // n maps, (alice_mem * |F_{i-1}|) -> alice_mem * channel_in
  std::vector<Instrument> decoders;    // n-1 instruments, (channel_out * bob_mem) -> bob_mem
  std::vector<Matrix> povm;            // elements on channel_out * bob_mem
  HermitianObservable hamiltonian;     // on the channel input
  std::optional<double> energy_budget; // empty = unconstrained

  int dim_alice_mem() const;
  int dim_channel_in() const;
  int dim_channel_out() const;
  int dim_bob_mem() const;
  int feedback_alphabet(int i) const; // |F_i|: i = 0 from initial_bob, else decoder i-1
  const ChannelMixture* mixture() const;
  KrausChannel flattened_channel() const;
  void validate() const;
};

struct RoundRecord {
  int round = 0;                  // 1-based
  double monotone_before = 0.0;   // on the post-encoding state
  double monotone_after = 0.0;    // on the post-channel state
  double input_energy = 0.0;      // Tr{H omega_{A_i}}
  double channel_output_entropy = 0.0;              // S(B_i)
  std::optional<double> conditional_output_entropy; // S(B_i|Z_i), mixture simulations only
};

// Reduced per-round snapshots, retained for consistency checks and for
// recomputing recorded monotone values.
struct RoundStates {
  CQEnsemble omega_bob;  // Bob-side systems after encoding
  CQEnsemble rho_bob;    // Bob-side systems plus the channel output
  CQEnsemble omega_real; // unpurified systems [alice_mem, channel, bob_mem]
  CQEnsemble rho_real;
};

struct ProtocolTrace {
  int n = 0;
  int M = 0;
  bool purified = false;
  bool mixture = false;
  std::vector<RoundRecord> rounds;
  double error_probability = 0.0;
  double average_energy = 0.0;
  Eigen::MatrixXd final_joint;  // p(w, w_hat), M x (povm outcomes)
  DensityMatrix average_input;  // omega_bar on the channel input
  std::vector<double> z_probs;  // mixture weights (empty otherwise)
  std::vector<RoundStates> states; // filled when RunOptions::keep_states
};

struct RunOptions {
  bool keep_copies = true; // condition monotones on the retained feedback copies
  bool keep_states = true;
  int dim_cap = 64; // per-branch quantum dimension
};

// Purified simulation: encoders and the channel run as isometric dilations,
// decoders as single-operator dilations per outcome, and the final POVM as
// the square-root measurement dilation. Conditioned on the classical branch,
// every state stays pure.
ProtocolTrace run_purified(const ProtocolSpec& spec, const RunOptions& opts = {});

// Density-matrix simulation of the protocol as specified; agrees with
// run_purified on error probability and energy.
ProtocolTrace run_original(const ProtocolSpec& spec, const RunOptions& opts = {});

// Purified simulation of the mixture-channel protocol: before each use a
// fresh classical Z_i (distributed as the mixture weights) is adjoined and
// shared, the branch channel N^z is applied, and everything else runs blind
// to Z. Z branches are enumerated exactly, so the run is deterministic.
ProtocolTrace run_mixture_simulation(const ProtocolSpec& spec, const RunOptions& opts = {});

// Classical mutual information of the final (W, W_hat) joint, in bits.
double final_mutual_information(const ProtocolTrace& trace);

// Largest deviation (probability or state entry) between per-round real-system
// snapshots of two runs, after marginalizing drop_registers_from_a out of a.
// Both runs must have been produced with keep_states.
double compare_real_traces(const ProtocolTrace& a, const ProtocolTrace& b,
                           const std::vector<std::string>& drop_registers_from_a = {});

struct RandomSpecConfig {
  int n = 2;
  int M = 2;
  int f_alphabet = 2;
  uint64_t seed = 0;
  std::optional<ChannelMixture> channel; // default: random qubit channel, env dim 2
};

// Qubit-system protocol fleet generator: Haar codewords and initial states,
// isometric encoders, instrument decoders from Haar isometries, and a POVM
// from a partitioned Haar basis.
ProtocolSpec random_protocol_spec(const RandomSpecConfig& cfg);

} // namespace qfb

#endif
