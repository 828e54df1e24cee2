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

#ifndef QFB_CQ_HPP
#define QFB_CQ_HPP

#include <map>
#include <string>
#include <vector>

#include "qfb/states.hpp"

namespace qfb {

struct Register {
  std::string name;
  int size = 0;
};

struct CQBranch {
  double prob = 0.0;
  DensityMatrix state; // normalized, shared layout across the ensemble
};

// Classical-quantum state kept in ensemble form: classical registers are
// symbolic label tuples, quantum systems are a shared layout. Entropic
// quantities exploit the block-diagonal structure instead of flattening.
struct CQEnsemble {
  std::vector<Register> registers;
  std::map<std::vector<int>, CQBranch> branches;

  const SystemLayout& quantum_layout() const;
  int register_index(const std::string& name) const;
  bool has_register(const std::string& name) const;
  double total_prob() const;
  void validate() const;

  // Single-branch ensemble with no classical registers.
  static CQEnsemble from_state(DensityMatrix state);
};

// Marginal ensemble keeping a subset of registers (grouped, states averaged)
// and a subset of quantum factors (partial trace). Register and label subsets
// are taken in the ensemble's own order.
CQEnsemble marginal_ensemble(const CQEnsemble& e, const std::vector<std::string>& keep_registers,
                             const std::vector<std::string>& keep_quantum);

// Entropy in bits of the flattened state on the chosen systems, computed as
// H(classical groups) + sum_g p_g S(state_g).
double entropy_of(const CQEnsemble& e, const std::vector<std::string>& registers,
                  const std::vector<std::string>& quantum);

// Parts may mix register names and quantum labels; they must be disjoint.
double mutual_information(const CQEnsemble& e, const std::vector<std::string>& part_a,
                          const std::vector<std::string>& part_b);

double conditional_entropy(const CQEnsemble& e, const std::vector<std::string>& target_quantum,
                           const std::vector<std::string>& given_registers);

// I(W; C F) + S(C | W F), the quantity tracked through feedback protocols.
double monotone(const CQEnsemble& e, const std::string& w_register, const std::vector<std::string>& f_registers,
                const std::vector<std::string>& c_quantum);

// Measurement with retained post-measurement state: CP maps labeled by
// outcome whose sum map is trace preserving.
struct Instrument {
  int dim_in = 0;
  int dim_out = 0;
  struct Outcome {
    std::string label;
    std::vector<Matrix> kraus; // each dim_out x dim_in
  };
  std::vector<Outcome> outcomes;

  double sum_tp_defect() const;
  void validate() const;
};

// Receiver-to-sender LOCC round: per shared outcome x, a single receiver
// operator V^x (sum of V^dag V trace preserving) and a sender isometry U^x.
struct OneWayLOCC {
  struct Outcome {
    std::string label;
    Matrix sender_isometry; // columns = sender input dim
    Matrix receiver_op;     // columns = receiver input dim
  };
  std::vector<Outcome> outcomes;

  void validate() const;
};

// Applies the instrument to the factors `on` (replaced by a single factor
// `out_label` of dim_out, at the slot of the first), recording the outcome in
// a new classical register. Branches below tol().p_min are pruned; total
// pruned mass above 1e-9 throws. If pruned_mass is non-null it receives the
// pruned total.
CQEnsemble apply_instrument(const Instrument& inst, const CQEnsemble& e, const std::vector<std::string>& on,
                            const std::string& new_register, const std::string& out_label = std::string(),
                            double* pruned_mass = nullptr);

// Applies a 1W-LOCC channel: sender isometry on factors `a`, receiver op on
// factors `b`, outcome recorded in x_register. Conditional states must be
// pure within tol().eq.
CQEnsemble apply_1wlocc(const OneWayLOCC& m, const CQEnsemble& e, const std::vector<std::string>& a,
                        const std::vector<std::string>& b, const std::string& x_register,
                        const std::string& a_out_label = std::string(),
                        const std::string& b_out_label = std::string(), double* pruned_mass = nullptr);

// Block-diagonal density matrix with registers embedded as leading factors.
DensityMatrix flatten(const CQEnsemble& e);

} // namespace qfb

#endif
