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

#ifndef QFB_VERIFY_HPP
#define QFB_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfb/bounds.hpp"
#include "qfb/protocol.hpp"

namespace qfb {

// Margins are in bits: inequality slack LHS-vs-RHS, nonnegative when the
// inequality holds. A margin below -tol().ineq counts as a violation; one
// below -tol().abort_margin is treated as a genuine counterexample, aborting
// the run and dumping the instance for replay.
struct CheckResult {
  std::string name;
  int trials = 0;
  int violations = 0;
  double worst_margin = 0.0;
  uint64_t seed = 0;
  std::vector<double> margins;
  bool aborted = false;
  std::string replay_path;

  bool passed() const { return violations == 0 && !aborted; }
  nlohmann::json to_json(bool include_margins = true) const;
};

struct CheckOptions {
  int trials = 500;
  int dims = 4; // per-system dimensions are sampled from [2, dims]
  uint64_t seed = 0;
  std::string replay_dir = ".";
};

// Pure bipartite entanglement entropy never increases on average under a
// receiver-side 1W-LOCC: margin = S(B)_phi - S(B'|X).
CheckResult check_lemma1(const CheckOptions& opts);

// The information measure I(W;BF) + S(B|WF) is monotone under 1W-LOCC from
// receiver to sender on c-q states with pure conditionals.
CheckResult check_lemma2(const CheckOptions& opts);

// One channel use increases the measure by at most the output entropy:
// margin = S(B) - [measure(after) - measure(before)].
CheckResult check_lemma3(const CheckOptions& opts);

// Conditional version with a shared classical Z selecting the branch channel;
// the amortized bound becomes S(B|Z).
CheckResult check_lemma3_mixture(const CheckOptions& opts);

// Margins of the five links of the finite-n rate bound chain:
//   a: (1-eps) log2 M <= I(W;W_hat) + h2(eps)
//   b: telescoping (initial zero, per-round 1W-LOCC monotonicity, amortized
//      increase <= S(B_i), final decoding)
//   c: sum_i S(B_i) <= n S(N(omega_bar))
//   d: n S(N(omega_bar)) <= n bound
//   e: (1-eps) log2 M <= n bound + h2(eps)
// The trace must come from run_purified with keep_states; one round's
// recorded monotone values are recomputed from the snapshots as a drift
// check.
CheckResult check_theorem1_chain(const ProtocolTrace& trace, const KrausChannel& channel, const BoundReport& bound);

// Mixture version: amortized bounds use S(B_i|Z_i) and the per-use cap is the
// maximum average output entropy.
CheckResult check_theorem2_chain(const ProtocolTrace& trace, const ChannelMixture& mix, const BoundReport& bound);

struct FleetOptions {
  int protocols = 20;
  uint64_t seed = 0;
  std::string replay_dir = ".";
  int dim_cap = 256;
};

// Random purified protocols (n in 1..3, M in {2,4}, qubit systems) against
// the unconstrained per-use bound of their own channel.
CheckResult check_theorem1_fleet(const FleetOptions& opts);

// Random mixture-simulation protocols over the given mixture. Each protocol
// contributes the five chain margins plus a Z-marginalization consistency
// margin (1e-8 minus the deviation from the flattened-channel run).
CheckResult check_theorem2_fleet(const FleetOptions& opts, const ChannelMixture& mix);

// Re-evaluates the margin stored in a replay file written after a genuine
// violation.
double replay_margin(const nlohmann::json& replay);

} // namespace qfb

#endif
