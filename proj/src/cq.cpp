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

#include "qfb/cq.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace qfb {

const SystemLayout& CQEnsemble::quantum_layout() const {
  if (branches.empty()) throw std::invalid_argument("ensemble has no branches");
  return branches.begin()->second.state.layout;
}

int CQEnsemble::register_index(const std::string& name) const {
  for (size_t i = 0; i < registers.size(); ++i)
    if (registers[i].name == name) return static_cast<int>(i);
  throw std::invalid_argument("unknown classical register '" + name + "'");
}

bool CQEnsemble::has_register(const std::string& name) const {
  for (const auto& r : registers)
    if (r.name == name) return true;
  return false;
}

double CQEnsemble::total_prob() const {
  double s = 0.0;
  for (const auto& [label, b] : branches) s += b.prob;
  return s;
}

void CQEnsemble::validate() const {
  if (branches.empty()) throw std::invalid_argument("ensemble has no branches");
  const SystemLayout& layout = quantum_layout();
  for (const auto& [label, b] : branches) {
    if (label.size() != registers.size())
      throw std::invalid_argument("branch label arity does not match register count");
    for (size_t i = 0; i < label.size(); ++i)
      if (label[i] < 0 || label[i] >= registers[i].size)
        throw std::invalid_argument("branch label value out of range for register '" + registers[i].name + "'");
    if (b.prob < 0) throw std::invalid_argument("branch probability is negative");
    if (!(b.state.layout == layout)) throw std::invalid_argument("branch states do not share one quantum layout");
    b.state.validate();
  }
  if (std::abs(total_prob() - 1.0) > tol().tr)
    throw std::invalid_argument("branch probabilities sum to " + std::to_string(total_prob()));
}

CQEnsemble CQEnsemble::from_state(DensityMatrix state) {
  CQEnsemble e;
  e.branches.emplace(std::vector<int>{}, CQBranch{1.0, std::move(state)});
  return e;
}

// ---- marginals and entropies ---------------------------------------------------

CQEnsemble marginal_ensemble(const CQEnsemble& e, const std::vector<std::string>& keep_registers,
                             const std::vector<std::string>& keep_quantum) {
  std::vector<int> reg_pos;
  {
    const std::set<std::string> want(keep_registers.begin(), keep_registers.end());
    for (const auto& name : keep_registers) e.register_index(name); // reject unknown names
    for (size_t i = 0; i < e.registers.size(); ++i)
      if (want.count(e.registers[i].name)) reg_pos.push_back(static_cast<int>(i));
  }

  CQEnsemble out;
  for (int p : reg_pos) out.registers.push_back(e.registers[static_cast<size_t>(p)]);

  std::map<std::vector<int>, std::pair<double, Matrix>> groups;
  SystemLayout reduced_layout;
  bool have_layout = false;
  for (const auto& [label, b] : e.branches) {
    std::vector<int> key;
    key.reserve(reg_pos.size());
    for (int p : reg_pos) key.push_back(label[static_cast<size_t>(p)]);
    const DensityMatrix red = reduce_to(b.state, keep_quantum);
    if (!have_layout) {
      reduced_layout = red.layout;
      have_layout = true;
    }
    auto it = groups.find(key);
    if (it == groups.end())
      groups.emplace(std::move(key), std::make_pair(b.prob, Matrix(b.prob * red.mat)));
    else {
      it->second.first += b.prob;
      it->second.second += b.prob * red.mat;
    }
  }
  for (auto& [key, acc] : groups) {
    Matrix state = acc.first > 0 ? Matrix(acc.second / acc.first) : acc.second;
    out.branches.emplace(key, CQBranch{acc.first, DensityMatrix{reduced_layout, std::move(state)}});
  }
  return out;
}

double entropy_of(const CQEnsemble& e, const std::vector<std::string>& registers,
                  const std::vector<std::string>& quantum) {
  const CQEnsemble m = marginal_ensemble(e, registers, quantum);
  std::vector<double> probs;
  probs.reserve(m.branches.size());
  double s = 0.0;
  const bool has_quantum = !quantum.empty();
  for (const auto& [label, b] : m.branches) {
    probs.push_back(b.prob);
    if (has_quantum && b.prob > tol().clip) s += b.prob * von_neumann_entropy(b.state);
  }
  return entropy_of_probs(probs) + s;
}

static void split_systems(const CQEnsemble& e, const std::vector<std::string>& part, std::vector<std::string>& regs,
                          std::vector<std::string>& quants) {
  for (const auto& name : part) {
    if (e.has_register(name))
      regs.push_back(name);
    else if (e.quantum_layout().has(name))
      quants.push_back(name);
    else
      throw std::invalid_argument("system '" + name + "' is neither a register nor a quantum factor");
  }
}

double mutual_information(const CQEnsemble& e, const std::vector<std::string>& part_a,
                          const std::vector<std::string>& part_b) {
  for (const auto& a : part_a)
    for (const auto& b : part_b)
      if (a == b) throw std::invalid_argument("mutual information parts overlap on '" + a + "'");

  std::vector<std::string> regs_a, quants_a, regs_b, quants_b;
  split_systems(e, part_a, regs_a, quants_a);
  split_systems(e, part_b, regs_b, quants_b);

  // A deterministic classical part carries no correlation; return exact 0
  // rather than relying on numerical cancellation.
  auto deterministic_classical = [&](const std::vector<std::string>& regs, const std::vector<std::string>& quants) {
    if (!quants.empty()) return false;
    return marginal_ensemble(e, regs, {}).branches.size() == 1;
  };
  if (deterministic_classical(regs_a, quants_a) || deterministic_classical(regs_b, quants_b)) return 0.0;

  std::vector<std::string> regs_ab = regs_a, quants_ab = quants_a;
  regs_ab.insert(regs_ab.end(), regs_b.begin(), regs_b.end());
  quants_ab.insert(quants_ab.end(), quants_b.begin(), quants_b.end());

  return entropy_of(e, regs_a, quants_a) + entropy_of(e, regs_b, quants_b) - entropy_of(e, regs_ab, quants_ab);
}

double conditional_entropy(const CQEnsemble& e, const std::vector<std::string>& target_quantum,
                           const std::vector<std::string>& given_registers) {
  for (const auto& name : target_quantum)
    if (!e.quantum_layout().has(name))
      throw std::invalid_argument("conditional entropy target '" + name + "' is not a quantum factor");
  const CQEnsemble m = marginal_ensemble(e, given_registers, target_quantum);
  double s = 0.0;
  for (const auto& [label, b] : m.branches)
    if (b.prob > tol().clip) s += b.prob * von_neumann_entropy(b.state);
  return s;
}

double monotone(const CQEnsemble& e, const std::string& w_register, const std::vector<std::string>& f_registers,
                const std::vector<std::string>& c_quantum) {
  std::vector<std::string> cf = f_registers;
  cf.insert(cf.end(), c_quantum.begin(), c_quantum.end());
  std::vector<std::string> wf = f_registers;
  wf.push_back(w_register);
  return mutual_information(e, {w_register}, cf) + conditional_entropy(e, c_quantum, wf);
}

// ---- instruments ----------------------------------------------------------------

double Instrument::sum_tp_defect() const {
  Matrix acc = Matrix::Zero(dim_in, dim_in);
  for (const auto& o : outcomes)
    for (const auto& k : o.kraus) acc += k.adjoint() * k;
  return (acc - Matrix::Identity(dim_in, dim_in)).cwiseAbs().maxCoeff();
}

void Instrument::validate() const {
  if (outcomes.empty()) throw std::invalid_argument("instrument has no outcomes");
  for (const auto& o : outcomes)
    for (const auto& k : o.kraus)
      if (k.rows() != dim_out || k.cols() != dim_in)
        throw std::invalid_argument("instrument operator shape does not match dims");
  const double defect = sum_tp_defect();
  if (defect > tol().tp)
    throw std::invalid_argument("instrument sum map is not trace preserving, defect " + std::to_string(defect));
}

void OneWayLOCC::validate() const {
  if (outcomes.empty()) throw std::invalid_argument("1W-LOCC channel has no outcomes");
  Matrix acc;
  bool first = true;
  for (const auto& o : outcomes) {
    const Matrix& u = o.sender_isometry;
    const double iso = (u.adjoint() * u - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
    if (iso > tol().tp) throw std::invalid_argument("sender operator is not an isometry, defect " + std::to_string(iso));
    if (first) {
      acc = o.receiver_op.adjoint() * o.receiver_op;
      first = false;
    } else {
      acc += o.receiver_op.adjoint() * o.receiver_op;
    }
  }
  const double defect = (acc - Matrix::Identity(acc.rows(), acc.cols())).cwiseAbs().maxCoeff();
  if (defect > tol().tp)
    throw std::invalid_argument("receiver operators do not sum to a channel, defect " + std::to_string(defect));
}

namespace {

struct OutcomeBranching {
  CQEnsemble out;
  double pruned = 0.0;

  void insert(std::vector<int> label, double prob, DensityMatrix state) {
    if (prob < tol().p_min) {
      pruned += std::max(prob, 0.0);
      return;
    }
    out.branches.emplace(std::move(label), CQBranch{prob, std::move(state)});
  }

  void finish(const std::string& op_name, double* pruned_mass) {
    if (pruned_mass) *pruned_mass = pruned;
    if (pruned > 1e-9)
      throw std::runtime_error(op_name + " pruned probability mass " + std::to_string(pruned) +
                               "; sum map is not trace preserving");
    if (out.branches.empty()) throw std::runtime_error(op_name + " pruned every branch");
  }
};

} // namespace

CQEnsemble apply_instrument(const Instrument& inst, const CQEnsemble& e, const std::vector<std::string>& on,
                            const std::string& new_register, const std::string& out_label, double* pruned_mass) {
  const std::string label_out = out_label.empty() ? on.front() : out_label;
  const std::vector<Factor> out_factors = {{label_out, inst.dim_out}};
  const SystemLayout& layout = e.quantum_layout();

  // Lift each operator once; branches share the layout.
  std::vector<std::vector<LiftedOperator>> lifted(inst.outcomes.size());
  for (size_t j = 0; j < inst.outcomes.size(); ++j)
    for (const auto& k : inst.outcomes[j].kraus) lifted[j].push_back(lift_operator(layout, on, k, out_factors));

  OutcomeBranching acc;
  acc.out.registers = e.registers;
  acc.out.registers.push_back(Register{new_register, static_cast<int>(inst.outcomes.size())});
  for (const auto& [label, b] : e.branches) {
    for (size_t j = 0; j < inst.outcomes.size(); ++j) {
      if (lifted[j].empty()) continue;
      Matrix m = Matrix::Zero(lifted[j][0].mat.rows(), lifted[j][0].mat.rows());
      for (const auto& f : lifted[j]) m += f.mat * b.state.mat * f.mat.adjoint();
      const double w = m.trace().real();
      std::vector<int> new_label = label;
      new_label.push_back(static_cast<int>(j));
      if (w > 0) m /= w;
      acc.insert(std::move(new_label), b.prob * w, DensityMatrix{lifted[j][0].layout, std::move(m)});
    }
  }
  acc.finish("apply_instrument", pruned_mass);
  return std::move(acc.out);
}

CQEnsemble apply_1wlocc(const OneWayLOCC& m, const CQEnsemble& e, const std::vector<std::string>& a,
                        const std::vector<std::string>& b, const std::string& x_register,
                        const std::string& a_out_label, const std::string& b_out_label, double* pruned_mass) {
  const SystemLayout& layout = e.quantum_layout();
  for (const auto& [label, br] : e.branches)
    if (purity(br.state) < 1.0 - tol().eq)
      throw std::invalid_argument("1W-LOCC requires pure conditional states; purity " +
                                  std::to_string(purity(br.state)));

  const std::string a_out = a_out_label.empty() ? a.front() : a_out_label;
  const std::string b_out = b_out_label.empty() ? b.front() : b_out_label;

  std::vector<Matrix> lifted(m.outcomes.size());
  SystemLayout out_layout;
  for (size_t x = 0; x < m.outcomes.size(); ++x) {
    const Matrix& u = m.outcomes[x].sender_isometry;
    const Matrix& v = m.outcomes[x].receiver_op;
    const LiftedOperator lu = lift_operator(layout, a, u, {{a_out, static_cast<int>(u.rows())}});
    const LiftedOperator lv = lift_operator(lu.layout, b, v, {{b_out, static_cast<int>(v.rows())}});
    if (x == 0)
      out_layout = lv.layout;
    else if (!(lv.layout == out_layout))
      throw std::invalid_argument("1W-LOCC outcomes must share output dimensions");
    lifted[x] = lv.mat * lu.mat;
  }

  OutcomeBranching acc;
  acc.out.registers = e.registers;
  acc.out.registers.push_back(Register{x_register, static_cast<int>(m.outcomes.size())});
  for (const auto& [label, br] : e.branches) {
    for (size_t x = 0; x < m.outcomes.size(); ++x) {
      Matrix s = lifted[x] * br.state.mat * lifted[x].adjoint();
      const double w = s.trace().real();
      std::vector<int> new_label = label;
      new_label.push_back(static_cast<int>(x));
      if (w > 0) s /= w;
      acc.insert(std::move(new_label), br.prob * w, DensityMatrix{out_layout, std::move(s)});
    }
  }
  acc.finish("apply_1wlocc", pruned_mass);
  return std::move(acc.out);
}

DensityMatrix flatten(const CQEnsemble& e) {
  std::vector<Factor> factors;
  for (const auto& r : e.registers) factors.push_back({r.name, r.size});
  SystemLayout class_layout{factors};
  const SystemLayout full = class_layout.concat(e.quantum_layout());

  const int dq = e.quantum_layout().total_dim();
  Matrix out = Matrix::Zero(full.total_dim(), full.total_dim());
  for (const auto& [label, b] : e.branches) {
    int c = 0;
    for (size_t r = 0; r < label.size(); ++r) c += label[r] * class_layout.stride(static_cast<int>(r));
    out.block(c * dq, c * dq, dq, dq) += b.prob * b.state.mat;
  }
  return DensityMatrix{full, std::move(out)};
}

} // namespace qfb
