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

#include "qfb/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "qfb/errors.hpp"
#include "qfb/random.hpp"

namespace qfb {

// ---- ProtocolSpec ---------------------------------------------------------------

int ProtocolSpec::dim_alice_mem() const { return codewords.empty() ? 0 : codewords.front().dim(); }

int ProtocolSpec::dim_channel_in() const {
  if (const auto* mix = std::get_if<ChannelMixture>(&channel)) return mix->dim_in();
  return std::get<KrausChannel>(channel).dim_in;
}

int ProtocolSpec::dim_channel_out() const {
  if (const auto* mix = std::get_if<ChannelMixture>(&channel)) return mix->dim_out();
  return std::get<KrausChannel>(channel).dim_out;
}

int ProtocolSpec::dim_bob_mem() const { return initial_bob.empty() ? 0 : initial_bob.front().second.dim(); }

int ProtocolSpec::feedback_alphabet(int i) const {
  if (i == 0) return static_cast<int>(initial_bob.size());
  return static_cast<int>(decoders[static_cast<size_t>(i - 1)].outcomes.size());
}

const ChannelMixture* ProtocolSpec::mixture() const { return std::get_if<ChannelMixture>(&channel); }

KrausChannel ProtocolSpec::flattened_channel() const {
  if (const auto* mix = mixture()) return mix->flatten();
  return std::get<KrausChannel>(channel);
}

void ProtocolSpec::validate() const {
  if (n < 1) throw std::invalid_argument("protocol needs at least one round");
  if (M < 1 || static_cast<int>(codewords.size()) != M)
    throw std::invalid_argument("codeword count must equal the message count M");
  if (initial_bob.empty()) throw std::invalid_argument("initial Bob ensemble is empty");
  if (static_cast<int>(encoders.size()) != n) throw std::invalid_argument("expected n encoders");
  if (static_cast<int>(decoders.size()) != n - 1) throw std::invalid_argument("expected n-1 decoders");
  if (povm.empty()) throw std::invalid_argument("final POVM is empty");

  if (const auto* mix = mixture())
    mix->validate();
  else
    std::get<KrausChannel>(channel).validate();

  const int d_ap = dim_alice_mem();
  const int d_a = dim_channel_in();
  const int d_b = dim_channel_out();
  const int d_bp = dim_bob_mem();

  double p_sum = 0.0;
  for (const auto& [p, sigma] : initial_bob) {
    if (p < 0) throw std::invalid_argument("initial Bob probability is negative");
    p_sum += p;
    if (sigma.dim() != d_bp) throw std::invalid_argument("initial Bob states must share one dimension");
    sigma.validate();
  }
  if (std::abs(p_sum - 1.0) > tol().tr) throw std::invalid_argument("initial Bob probabilities do not sum to 1");
  for (const auto& rho : codewords) {
    if (rho.dim() != d_ap) throw std::invalid_argument("codewords must share one dimension");
    rho.validate();
  }
  for (int i = 0; i < n; ++i) {
    const KrausChannel& enc = encoders[static_cast<size_t>(i)];
    enc.validate();
    if (enc.dim_in != d_ap * feedback_alphabet(i) || enc.dim_out != d_ap * d_a)
      throw std::invalid_argument("encoder " + std::to_string(i + 1) + " dimensions do not chain");
  }
  for (int i = 0; i + 1 < n; ++i) {
    const Instrument& dec = decoders[static_cast<size_t>(i)];
    dec.validate();
    if (dec.dim_in != d_b * d_bp || dec.dim_out != d_bp)
      throw std::invalid_argument("decoder " + std::to_string(i + 1) + " dimensions do not chain");
  }
  Matrix povm_sum = Matrix::Zero(d_b * d_bp, d_b * d_bp);
  for (const auto& el : povm) {
    if (el.rows() != d_b * d_bp || el.cols() != d_b * d_bp)
      throw std::invalid_argument("POVM element dimension does not match channel_out * bob_mem");
    if (hermiticity_defect(el) > tol().herm) throw std::invalid_argument("POVM element is not Hermitian");
    if (eigh(el).eigenvalues.minCoeff() < -tol().psd) throw std::invalid_argument("POVM element is not PSD");
    povm_sum += el;
  }
  if ((povm_sum - Matrix::Identity(d_b * d_bp, d_b * d_bp)).cwiseAbs().maxCoeff() > tol().tp)
    throw std::invalid_argument("POVM elements do not sum to the identity");
  if (hamiltonian.dim() != d_a) throw std::invalid_argument("Hamiltonian must act on the channel input");
  hamiltonian.validate();
}

// ---- shared machinery ------------------------------------------------------------

namespace {

constexpr const char* kAliceMem = "Ap";
constexpr const char* kChannelIo = "Ch";
constexpr const char* kBobMem = "Bp";
constexpr const char* kMerged = "BW";

// Encoder conditioned on the classical feedback symbol f: each Kraus operator
// restricted to the input block |f>, giving a channel from alice_mem alone.
std::vector<Matrix> condition_on_symbol(const KrausChannel& enc, int d_mem, int alphabet, int f) {
  std::vector<Matrix> out;
  for (const auto& k : enc.kraus) {
    Matrix m(k.rows(), d_mem);
    for (int a = 0; a < d_mem; ++a) m.col(a) = k.col(a * alphabet + f);
    out.push_back(std::move(m));
  }
  return out;
}

// Single-operator dilation sum_e K_e (x) |e>_env with the environment padded
// to env_dim; rows order output before environment.
Matrix padded_dilation(const std::vector<Matrix>& kraus, int env_dim) {
  const int d_out = static_cast<int>(kraus.front().rows());
  const int d_in = static_cast<int>(kraus.front().cols());
  Matrix v = Matrix::Zero(d_out * env_dim, d_in);
  for (size_t e = 0; e < kraus.size(); ++e)
    for (int b = 0; b < d_out; ++b) v.row(b * env_dim + static_cast<int>(e)) = kraus[e].row(b);
  return v;
}

int numerical_rank(const DensityMatrix& rho) {
  const EighResult es = eigh(rho.mat);
  int rank = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues.size(); ++i)
    if (es.eigenvalues(i) > tol().clip) rank = static_cast<int>(i) + 1;
  return std::max(rank, 1);
}

// Purification amplitudes with a fixed reference dimension; a reference of
// dim 1 adds no factor so pure inputs stay lean.
std::pair<std::vector<Factor>, Vector> purify_amplitudes(const DensityMatrix& rho, const std::string& mem_label,
                                                         const std::string& ref_label, int ref_dim) {
  const EighResult es = eigh(rho.mat);
  std::vector<Factor> factors = {{mem_label, rho.dim()}};
  if (ref_dim == 1) return {factors, es.eigenvectors.col(0)};
  factors.push_back({ref_label, ref_dim});
  Vector v = Vector::Zero(rho.dim() * ref_dim);
  for (Eigen::Index i = 0; i < es.eigenvalues.size(); ++i) {
    if (es.eigenvalues(i) <= tol().clip) continue;
    for (int a = 0; a < rho.dim(); ++a)
      v(a * ref_dim + static_cast<int>(i)) = std::sqrt(es.eigenvalues(i)) * es.eigenvectors(a, i);
  }
  return {factors, v};
}

Vector kron_vec(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

struct PBranch {
  double prob = 0.0;
  Vector vec; // normalized
};

struct MBranch {
  double prob = 0.0;
  Matrix mat; // normalized density matrix
};

// Per-round trace recording shared by the purified and original engines.
class Recorder {
 public:
  Recorder(const ProtocolSpec& spec, const RunOptions& opts) : spec_(spec), opts_(opts) {
    trace_.n = spec.n;
    trace_.M = spec.M;
    omega_accum_ = Matrix::Zero(spec.dim_channel_in(), spec.dim_channel_in());
    if (opts.keep_states) trace_.states.resize(static_cast<size_t>(spec.n));
  }

  void on_omega(int round, CQEnsemble bob_view, CQEnsemble real_view, const Matrix& channel_marginal) {
    RoundRecord rec;
    rec.round = round;
    rec.monotone_before = run_monotone(bob_view);
    rec.input_energy = (spec_.hamiltonian.mat * channel_marginal).trace().real();
    omega_accum_ += channel_marginal;
    trace_.rounds.push_back(rec);
    if (opts_.keep_states) {
      trace_.states[static_cast<size_t>(round - 1)].omega_bob = std::move(bob_view);
      trace_.states[static_cast<size_t>(round - 1)].omega_real = std::move(real_view);
    }
  }

  void on_rho(int round, CQEnsemble bob_view, CQEnsemble real_view, const Matrix& channel_marginal,
              const std::string& z_register) {
    RoundRecord& rec = trace_.rounds.back();
    rec.monotone_after = run_monotone(bob_view);
    rec.channel_output_entropy =
        von_neumann_entropy(DensityMatrix{SystemLayout({{kChannelIo, static_cast<int>(channel_marginal.rows())}}),
                                          channel_marginal});
    if (!z_register.empty())
      rec.conditional_output_entropy = conditional_entropy(bob_view, {kChannelIo}, {z_register});
    if (opts_.keep_states) {
      trace_.states[static_cast<size_t>(round - 1)].rho_bob = std::move(bob_view);
      trace_.states[static_cast<size_t>(round - 1)].rho_real = std::move(real_view);
    }
  }

  ProtocolTrace finish(Eigen::MatrixXd final_joint) {
    trace_.final_joint = std::move(final_joint);
    double diag = 0.0;
    for (int w = 0; w < std::min<int>(spec_.M, static_cast<int>(trace_.final_joint.cols())); ++w)
      diag += trace_.final_joint(w, w);
    trace_.error_probability = 1.0 - diag;
    double e = 0.0;
    for (const auto& r : trace_.rounds) e += r.input_energy;
    trace_.average_energy = e / spec_.n;
    trace_.average_input = DensityMatrix{spec_.hamiltonian.layout, omega_accum_ / spec_.n};
    return std::move(trace_);
  }

  // I(W; C F') + S(C | W F') with the F' group holding every retained
  // classical register (feedback copies and any Z) when keep_copies is set.
  double run_monotone(const CQEnsemble& view) const {
    std::vector<std::string> f_regs;
    if (opts_.keep_copies)
      for (const auto& r : view.registers)
        if (r.name != "W") f_regs.push_back(r.name);
    return monotone(view, "W", f_regs, view.quantum_layout().labels());
  }

 private:
  const ProtocolSpec& spec_;
  RunOptions opts_;
  ProtocolTrace trace_;
  Matrix omega_accum_;
};

Eigen::MatrixXd classical_joint(const std::map<std::vector<int>, double>& probs, int m, int what_size, int w_pos,
                                int what_pos) {
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(m, what_size);
  for (const auto& [label, p] : probs) {
    const int w = label[static_cast<size_t>(w_pos)];
    const int what = label[static_cast<size_t>(what_pos)];
    if (w < m) joint(w, what) += p;
  }
  return joint;
}

// ---- purified engine ---------------------------------------------------------------

class PurifiedEngine {
 public:
  PurifiedEngine(const ProtocolSpec& spec, const RunOptions& opts, bool mixture_mode)
      : spec_(spec), opts_(opts), mixture_(mixture_mode), recorder_(spec, opts) {
    if (mixture_ && !spec.mixture())
      throw std::invalid_argument("mixture simulation requires a ChannelMixture channel");
  }

  ProtocolTrace run() {
    init();
    for (int round = 1; round <= spec_.n; ++round) {
      encode(round);
      record_omega(round);
      if (mixture_) adjoin_z(round);
      transmit(round);
      record_rho(round);
      if (round < spec_.n) decode(round);
    }
    return measure_and_finish();
  }

 private:
  void check_cap(int dim) const {
    if (dim > opts_.dim_cap)
      throw dimension_cap_error("branch dimension " + std::to_string(dim) + " exceeds the cap " +
                                std::to_string(opts_.dim_cap));
  }

  void init() {
    int ref_a = 1, ref_b = 1;
    for (const auto& c : spec_.codewords) ref_a = std::max(ref_a, numerical_rank(c));
    for (const auto& [p, s] : spec_.initial_bob) ref_b = std::max(ref_b, numerical_rank(s));

    std::vector<Vector> alice;
    std::vector<Factor> alice_factors;
    for (const auto& c : spec_.codewords) {
      auto [fs, v] = purify_amplitudes(c, kAliceMem, "Ar", ref_a);
      alice_factors = fs;
      alice.push_back(std::move(v));
    }
    std::vector<Vector> bob;
    std::vector<Factor> bob_factors;
    for (const auto& [p, s] : spec_.initial_bob) {
      auto [fs, v] = purify_amplitudes(s, kBobMem, "Br", ref_b);
      bob_factors = fs;
      bob.push_back(std::move(v));
    }

    std::vector<Factor> fs = alice_factors;
    fs.insert(fs.end(), bob_factors.begin(), bob_factors.end());
    layout_ = SystemLayout(fs);
    check_cap(layout_.total_dim());
    for (const auto& f : bob_factors) bob_labels_.insert(f.label);

    registers_ = {{"W", spec_.M}, {"F0", static_cast<int>(spec_.initial_bob.size())}};
    for (int m = 0; m < spec_.M; ++m)
      for (size_t f0 = 0; f0 < spec_.initial_bob.size(); ++f0) {
        const double p = spec_.initial_bob[f0].first / spec_.M;
        if (p < tol().p_min) continue;
        branches_.emplace(std::vector<int>{m, static_cast<int>(f0)},
                          PBranch{p, kron_vec(alice[static_cast<size_t>(m)], bob[f0])});
      }
  }

  int find_register(const std::string& name) const {
    for (size_t i = 0; i < registers_.size(); ++i)
      if (registers_[i].name == name) return static_cast<int>(i);
    throw std::invalid_argument("engine register '" + name + "' not found");
  }

  // Applies per-register-value isometries; all values share an output layout.
  void apply_conditioned(int reg_pos, const std::vector<LiftedOperator>& ops) {
    for (auto& [label, b] : branches_) {
      b.vec = ops[static_cast<size_t>(label[static_cast<size_t>(reg_pos)])].mat * b.vec;
      if (std::abs(b.vec.norm() - 1.0) > tol().eq)
        throw std::runtime_error("purity loss: branch norm drifted to " + std::to_string(b.vec.norm()));
    }
    layout_ = ops.front().layout;
  }

  void encode(int round) {
    const KrausChannel& enc = spec_.encoders[static_cast<size_t>(round - 1)];
    const int alphabet = spec_.feedback_alphabet(round - 1);
    const int d_mem = spec_.dim_alice_mem();
    const int env = static_cast<int>(enc.kraus.size());

    std::vector<Factor> out_factors = {{kAliceMem, d_mem}, {kChannelIo, spec_.dim_channel_in()}};
    if (env > 1) out_factors.push_back({"Ae" + std::to_string(round), env});
    check_cap(layout_.total_dim() * spec_.dim_channel_in() * env);

    std::vector<LiftedOperator> ops;
    for (int f = 0; f < alphabet; ++f) {
      const Matrix v = padded_dilation(condition_on_symbol(enc, d_mem, alphabet, f), env);
      ops.push_back(lift_operator(layout_, {kAliceMem}, v, out_factors));
    }
    apply_conditioned(find_register("F" + std::to_string(round - 1)), ops);
  }

  void adjoin_z(int round) {
    const ChannelMixture& mix = *spec_.mixture();
    registers_.push_back({"Z" + std::to_string(round), static_cast<int>(mix.weights.size())});
    std::map<std::vector<int>, PBranch> next;
    for (const auto& [label, b] : branches_)
      for (size_t z = 0; z < mix.weights.size(); ++z) {
        const double p = b.prob * mix.weights[z];
        if (p < tol().p_min) continue;
        std::vector<int> l = label;
        l.push_back(static_cast<int>(z));
        next.emplace(std::move(l), PBranch{p, b.vec});
      }
    branches_ = std::move(next);
  }

  void transmit(int round) {
    const std::string env_label = "Ev" + std::to_string(round);
    const int d_in = spec_.dim_channel_in();
    const int d_out = spec_.dim_channel_out();
    if (mixture_) {
      const ChannelMixture& mix = *spec_.mixture();
      int env = 1;
      for (const auto& c : mix.components) env = std::max(env, static_cast<int>(c.kraus.size()));
      std::vector<Factor> out_factors = {{kChannelIo, d_out}};
      if (env > 1) out_factors.push_back({env_label, env});
      check_cap(layout_.total_dim() / d_in * d_out * env);
      std::vector<LiftedOperator> ops;
      for (const auto& c : mix.components)
        ops.push_back(lift_operator(layout_, {kChannelIo}, padded_dilation(c.kraus, env), out_factors));
      apply_conditioned(find_register("Z" + std::to_string(round)), ops);
    } else {
      const KrausChannel ch = spec_.flattened_channel();
      const int env = static_cast<int>(ch.kraus.size());
      std::vector<Factor> out_factors = {{kChannelIo, d_out}};
      if (env > 1) out_factors.push_back({env_label, env});
      check_cap(layout_.total_dim() / d_in * d_out * env);
      const LiftedOperator op = lift_operator(layout_, {kChannelIo}, padded_dilation(ch.kraus, env), out_factors);
      for (auto& [label, b] : branches_) {
        b.vec = op.mat * b.vec;
        if (std::abs(b.vec.norm() - 1.0) > tol().eq)
          throw std::runtime_error("purity loss: branch norm drifted after the channel dilation");
      }
      layout_ = op.layout;
    }
  }

  void decode(int round) {
    const Instrument& dec = spec_.decoders[static_cast<size_t>(round - 1)];
    int ref = 1;
    for (const auto& o : dec.outcomes) ref = std::max(ref, static_cast<int>(o.kraus.size()));
    std::vector<Factor> out_factors = {{kBobMem, spec_.dim_bob_mem()}};
    if (ref > 1) {
      out_factors.push_back({"Rd" + std::to_string(round), ref});
      bob_labels_.insert("Rd" + std::to_string(round));
    }
    check_cap(layout_.total_dim() / (spec_.dim_channel_out() * spec_.dim_bob_mem()) * spec_.dim_bob_mem() * ref);

    std::vector<LiftedOperator> ops;
    for (const auto& o : dec.outcomes)
      ops.push_back(lift_operator(layout_, {kChannelIo, kBobMem}, padded_dilation(o.kraus, ref), out_factors));
    branch_on_outcomes("F" + std::to_string(round), ops);
  }

  void branch_on_outcomes(const std::string& new_register, const std::vector<LiftedOperator>& ops) {
    registers_.push_back({new_register, static_cast<int>(ops.size())});
    std::map<std::vector<int>, PBranch> next;
    double pruned = 0.0, total = 0.0;
    for (const auto& [label, b] : branches_) {
      for (size_t j = 0; j < ops.size(); ++j) {
        Vector v = ops[j].mat * b.vec;
        const double w = v.squaredNorm();
        const double p = b.prob * w;
        total += p;
        if (p < tol().p_min) {
          pruned += std::max(p, 0.0);
          continue;
        }
        v /= std::sqrt(w);
        std::vector<int> l = label;
        l.push_back(static_cast<int>(j));
        next.emplace(std::move(l), PBranch{p, std::move(v)});
      }
    }
    if (pruned > 1e-9) throw std::runtime_error("instrument dilation pruned mass " + std::to_string(pruned));
    if (std::abs(total - 1.0) > 1e-7)
      throw std::runtime_error("instrument dilation is not trace preserving; total mass " + std::to_string(total));
    branches_ = std::move(next);
    layout_ = ops.front().layout;
  }

  DensityMatrix reduce_branch(const Vector& vec, const std::vector<std::string>& keep) const {
    return reduce_to(DensityMatrix{layout_, vec * vec.adjoint()}, keep);
  }

  CQEnsemble view(const std::vector<std::string>& quantum) const {
    CQEnsemble e;
    e.registers = registers_;
    for (const auto& [label, b] : branches_) e.branches.emplace(label, CQBranch{b.prob, reduce_branch(b.vec, quantum)});
    return e;
  }

  std::vector<std::string> bob_in_layout_order(bool include_channel) const {
    std::vector<std::string> out;
    for (const auto& f : layout_.factors())
      if (bob_labels_.count(f.label) || (include_channel && f.label == kChannelIo)) out.push_back(f.label);
    return out;
  }

  std::vector<std::string> real_in_layout_order() const {
    std::vector<std::string> out;
    for (const auto& f : layout_.factors())
      if (f.label == kAliceMem || f.label == kChannelIo || f.label == kBobMem) out.push_back(f.label);
    return out;
  }

  Matrix channel_marginal() const {
    const int d = layout_.dim_of(kChannelIo);
    Matrix acc = Matrix::Zero(d, d);
    for (const auto& [label, b] : branches_) acc += b.prob * reduce_branch(b.vec, {kChannelIo}).mat;
    return acc;
  }

  void record_omega(int round) {
    recorder_.on_omega(round, view(bob_in_layout_order(false)), view(real_in_layout_order()), channel_marginal());
  }

  void record_rho(int round) {
    recorder_.on_rho(round, view(bob_in_layout_order(true)), view(real_in_layout_order()), channel_marginal(),
                     mixture_ ? "Z" + std::to_string(round) : std::string());
  }

  ProtocolTrace measure_and_finish() {
    const int d = spec_.dim_channel_out() * spec_.dim_bob_mem();
    std::vector<LiftedOperator> ops;
    for (const auto& el : spec_.povm)
      ops.push_back(lift_operator(layout_, {kChannelIo, kBobMem}, psd_sqrt(el), {{kMerged, d}}));
    branch_on_outcomes("Wh", ops);

    std::map<std::vector<int>, double> probs;
    for (const auto& [label, b] : branches_) probs[label] = b.prob;
    ProtocolTrace trace = recorder_.finish(
        classical_joint(probs, spec_.M, static_cast<int>(spec_.povm.size()), find_register("W"), find_register("Wh")));
    trace.purified = true;
    trace.mixture = mixture_;
    if (mixture_) trace.z_probs = spec_.mixture()->weights;
    return trace;
  }

  const ProtocolSpec& spec_;
  RunOptions opts_;
  bool mixture_;
  Recorder recorder_;
  SystemLayout layout_;
  std::vector<Register> registers_;
  std::map<std::vector<int>, PBranch> branches_;
  std::set<std::string> bob_labels_;
};

// ---- original (density matrix) engine ------------------------------------------------

class OriginalEngine {
 public:
  OriginalEngine(const ProtocolSpec& spec, const RunOptions& opts) : spec_(spec), opts_(opts), recorder_(spec, opts) {}

  ProtocolTrace run() {
    init();
    for (int round = 1; round <= spec_.n; ++round) {
      encode(round);
      record_omega(round);
      transmit();
      record_rho(round);
      if (round < spec_.n) decode(round);
    }
    return measure_and_finish();
  }

 private:
  void init() {
    layout_ = SystemLayout({{kAliceMem, spec_.dim_alice_mem()}, {kBobMem, spec_.dim_bob_mem()}});
    registers_ = {{"W", spec_.M}, {"F0", static_cast<int>(spec_.initial_bob.size())}};
    for (int m = 0; m < spec_.M; ++m)
      for (size_t f0 = 0; f0 < spec_.initial_bob.size(); ++f0) {
        const double p = spec_.initial_bob[f0].first / spec_.M;
        if (p < tol().p_min) continue;
        branches_.emplace(
            std::vector<int>{m, static_cast<int>(f0)},
            MBranch{p, kron(spec_.codewords[static_cast<size_t>(m)].mat, spec_.initial_bob[f0].second.mat)});
      }
  }

  int find_register(const std::string& name) const {
    for (size_t i = 0; i < registers_.size(); ++i)
      if (registers_[i].name == name) return static_cast<int>(i);
    throw std::invalid_argument("engine register '" + name + "' not found");
  }

  void encode(int round) {
    const KrausChannel& enc = spec_.encoders[static_cast<size_t>(round - 1)];
    const int alphabet = spec_.feedback_alphabet(round - 1);
    const int d_mem = spec_.dim_alice_mem();
    const std::vector<Factor> out_factors = {{kAliceMem, d_mem}, {kChannelIo, spec_.dim_channel_in()}};

    std::vector<std::vector<LiftedOperator>> ops(static_cast<size_t>(alphabet));
    for (int f = 0; f < alphabet; ++f)
      for (const Matrix& k : condition_on_symbol(enc, d_mem, alphabet, f))
        ops[static_cast<size_t>(f)].push_back(lift_operator(layout_, {kAliceMem}, k, out_factors));

    const int reg = find_register("F" + std::to_string(round - 1));
    for (auto& [label, b] : branches_) {
      const auto& ks = ops[static_cast<size_t>(label[static_cast<size_t>(reg)])];
      Matrix acc = Matrix::Zero(ks.front().mat.rows(), ks.front().mat.rows());
      for (const auto& k : ks) acc += k.mat * b.mat * k.mat.adjoint();
      b.mat = std::move(acc);
    }
    layout_ = ops.front().front().layout;
  }

  void transmit() {
    const KrausChannel ch = spec_.flattened_channel();
    const std::vector<Factor> out_factors = {{kChannelIo, ch.dim_out}};
    std::vector<LiftedOperator> ks;
    for (const auto& k : ch.kraus) ks.push_back(lift_operator(layout_, {kChannelIo}, k, out_factors));
    for (auto& [label, b] : branches_) {
      Matrix acc = Matrix::Zero(ks.front().mat.rows(), ks.front().mat.rows());
      for (const auto& k : ks) acc += k.mat * b.mat * k.mat.adjoint();
      b.mat = std::move(acc);
    }
    layout_ = ks.front().layout;
  }

  void branch_on_outcomes(const std::string& new_register, const std::vector<std::vector<LiftedOperator>>& ops) {
    registers_.push_back({new_register, static_cast<int>(ops.size())});
    std::map<std::vector<int>, MBranch> next;
    double pruned = 0.0, total = 0.0;
    for (const auto& [label, b] : branches_) {
      for (size_t j = 0; j < ops.size(); ++j) {
        Matrix m = Matrix::Zero(ops[j].front().mat.rows(), ops[j].front().mat.rows());
        for (const auto& k : ops[j]) m += k.mat * b.mat * k.mat.adjoint();
        const double w = m.trace().real();
        const double p = b.prob * w;
        total += p;
        if (p < tol().p_min) {
          pruned += std::max(p, 0.0);
          continue;
        }
        m /= w;
        std::vector<int> l = label;
        l.push_back(static_cast<int>(j));
        next.emplace(std::move(l), MBranch{p, std::move(m)});
      }
    }
    if (pruned > 1e-9) throw std::runtime_error("instrument pruned mass " + std::to_string(pruned));
    if (std::abs(total - 1.0) > 1e-7)
      throw std::runtime_error("instrument is not trace preserving; total mass " + std::to_string(total));
    branches_ = std::move(next);
    layout_ = ops.front().front().layout;
  }

  void decode(int round) {
    const Instrument& dec = spec_.decoders[static_cast<size_t>(round - 1)];
    const std::vector<Factor> out_factors = {{kBobMem, spec_.dim_bob_mem()}};
    std::vector<std::vector<LiftedOperator>> ops;
    for (const auto& o : dec.outcomes) {
      std::vector<LiftedOperator> lifted;
      for (const auto& k : o.kraus) lifted.push_back(lift_operator(layout_, {kChannelIo, kBobMem}, k, out_factors));
      ops.push_back(std::move(lifted));
    }
    branch_on_outcomes("F" + std::to_string(round), ops);
  }

  CQEnsemble view(const std::vector<std::string>& quantum) const {
    CQEnsemble e;
    e.registers = registers_;
    for (const auto& [label, b] : branches_)
      e.branches.emplace(label, CQBranch{b.prob, reduce_to(DensityMatrix{layout_, b.mat}, quantum)});
    return e;
  }

  std::vector<std::string> quantum_labels(bool bob_only, bool include_channel) const {
    std::vector<std::string> out;
    for (const auto& f : layout_.factors()) {
      if (f.label == kBobMem)
        out.push_back(f.label);
      else if (f.label == kChannelIo && include_channel)
        out.push_back(f.label);
      else if (!bob_only && f.label == kAliceMem)
        out.push_back(f.label);
    }
    return out;
  }

  Matrix channel_marginal() const {
    const int d = layout_.dim_of(kChannelIo);
    Matrix acc = Matrix::Zero(d, d);
    for (const auto& [label, b] : branches_)
      acc += b.prob * reduce_to(DensityMatrix{layout_, b.mat}, {kChannelIo}).mat;
    return acc;
  }

  void record_omega(int round) {
    recorder_.on_omega(round, view(quantum_labels(true, false)), view(quantum_labels(false, true)),
                       channel_marginal());
  }

  void record_rho(int round) {
    recorder_.on_rho(round, view(quantum_labels(true, true)), view(quantum_labels(false, true)), channel_marginal(),
                     std::string());
  }

  ProtocolTrace measure_and_finish() {
    const int d = spec_.dim_channel_out() * spec_.dim_bob_mem();
    std::vector<std::vector<LiftedOperator>> ops;
    for (const auto& el : spec_.povm)
      ops.push_back({lift_operator(layout_, {kChannelIo, kBobMem}, psd_sqrt(el), {{kMerged, d}})});
    branch_on_outcomes("Wh", ops);

    std::map<std::vector<int>, double> probs;
    for (const auto& [label, b] : branches_) probs[label] = b.prob;
    ProtocolTrace trace = recorder_.finish(
        classical_joint(probs, spec_.M, static_cast<int>(spec_.povm.size()), find_register("W"), find_register("Wh")));
    trace.purified = false;
    return trace;
  }

  const ProtocolSpec& spec_;
  RunOptions opts_;
  Recorder recorder_;
  SystemLayout layout_;
  std::vector<Register> registers_;
  std::map<std::vector<int>, MBranch> branches_;
};

} // namespace

ProtocolTrace run_purified(const ProtocolSpec& spec, const RunOptions& opts) {
  spec.validate();
  return PurifiedEngine(spec, opts, false).run();
}

ProtocolTrace run_original(const ProtocolSpec& spec, const RunOptions& opts) {
  spec.validate();
  return OriginalEngine(spec, opts).run();
}

ProtocolTrace run_mixture_simulation(const ProtocolSpec& spec, const RunOptions& opts) {
  spec.validate();
  return PurifiedEngine(spec, opts, true).run();
}

// ---- trace utilities ------------------------------------------------------------------

double final_mutual_information(const ProtocolTrace& trace) {
  std::vector<double> pw, pwh, joint;
  const auto& j = trace.final_joint;
  for (Eigen::Index r = 0; r < j.rows(); ++r) pw.push_back(j.row(r).sum());
  for (Eigen::Index c = 0; c < j.cols(); ++c) pwh.push_back(j.col(c).sum());
  for (Eigen::Index r = 0; r < j.rows(); ++r)
    for (Eigen::Index c = 0; c < j.cols(); ++c) joint.push_back(j(r, c));
  return entropy_of_probs(pw) + entropy_of_probs(pwh) - entropy_of_probs(joint);
}

namespace {

double ensemble_deviation(const CQEnsemble& a, const CQEnsemble& b) {
  double worst = 0.0;
  std::set<std::vector<int>> keys;
  for (const auto& [k, v] : a.branches) keys.insert(k);
  for (const auto& [k, v] : b.branches) keys.insert(k);
  for (const auto& k : keys) {
    const auto ia = a.branches.find(k);
    const auto ib = b.branches.find(k);
    const double pa = ia == a.branches.end() ? 0.0 : ia->second.prob;
    const double pb = ib == b.branches.end() ? 0.0 : ib->second.prob;
    worst = std::max(worst, std::abs(pa - pb));
    const Matrix ma = ia == a.branches.end() ? Matrix() : Matrix(pa * ia->second.state.mat);
    const Matrix mb = ib == b.branches.end() ? Matrix() : Matrix(pb * ib->second.state.mat);
    if (ma.size() && mb.size())
      worst = std::max(worst, (ma - mb).cwiseAbs().maxCoeff());
    else if (ma.size())
      worst = std::max(worst, ma.cwiseAbs().maxCoeff());
    else if (mb.size())
      worst = std::max(worst, mb.cwiseAbs().maxCoeff());
  }
  return worst;
}

} // namespace

double compare_real_traces(const ProtocolTrace& a, const ProtocolTrace& b,
                           const std::vector<std::string>& drop_registers_from_a) {
  if (a.states.empty() || b.states.empty())
    throw std::invalid_argument("trace comparison requires keep_states runs");
  if (a.states.size() != b.states.size()) throw std::invalid_argument("trace round counts differ");
  double worst = 0.0;
  const std::set<std::string> drop(drop_registers_from_a.begin(), drop_registers_from_a.end());
  auto marginalize = [&](const CQEnsemble& e) {
    std::vector<std::string> keep_regs;
    for (const auto& r : e.registers)
      if (!drop.count(r.name)) keep_regs.push_back(r.name);
    return marginal_ensemble(e, keep_regs, e.quantum_layout().labels());
  };
  for (size_t i = 0; i < a.states.size(); ++i) {
    worst = std::max(worst, ensemble_deviation(marginalize(a.states[i].omega_real), b.states[i].omega_real));
    worst = std::max(worst, ensemble_deviation(marginalize(a.states[i].rho_real), b.states[i].rho_real));
  }
  return worst;
}

// ---- random spec generator ---------------------------------------------------------------

namespace {

Instrument instrument_from_isometry(Rng& rng, int dim_in, int dim_out, int outcomes, int ops_per_outcome) {
  const int total = outcomes * ops_per_outcome;
  const Matrix v = rng.haar_isometry(dim_out * total, dim_in);
  Instrument inst;
  inst.dim_in = dim_in;
  inst.dim_out = dim_out;
  for (int j = 0; j < outcomes; ++j) {
    Instrument::Outcome o;
    o.label = std::to_string(j);
    for (int t = 0; t < ops_per_outcome; ++t) {
      const int idx = j * ops_per_outcome + t;
      Matrix k(dim_out, dim_in);
      for (int b = 0; b < dim_out; ++b) k.row(b) = v.row(b * total + idx);
      o.kraus.push_back(std::move(k));
    }
    inst.outcomes.push_back(std::move(o));
  }
  return inst;
}

} // namespace

ProtocolSpec random_protocol_spec(const RandomSpecConfig& cfg) {
  if (cfg.n < 1 || cfg.M < 1 || cfg.f_alphabet < 1) throw std::invalid_argument("invalid random spec config");
  ProtocolSpec spec;
  spec.n = cfg.n;
  spec.M = cfg.M;
  if (cfg.channel)
    spec.channel = *cfg.channel;
  else
    spec.channel = random_channel(2, 2, 2, mix_seed(cfg.seed, "channel", 0));

  const int d_ap = 2, d_bp = 2;
  const int d_a = spec.dim_channel_in();
  const int d_b = spec.dim_channel_out();

  Rng rng(mix_seed(cfg.seed, "spec", 0));
  for (int m = 0; m < cfg.M; ++m) spec.codewords.push_back(rng.random_pure(SystemLayout({{"Ap", d_ap}})).to_density());

  const std::vector<double> pf = rng.dirichlet_uniform(cfg.f_alphabet);
  for (int f = 0; f < cfg.f_alphabet; ++f)
    spec.initial_bob.emplace_back(pf[static_cast<size_t>(f)],
                                  rng.random_pure(SystemLayout({{"Bp", d_bp}})).to_density());

  for (int i = 0; i < cfg.n; ++i) {
    const int d_in = d_ap * cfg.f_alphabet;
    const int d_out = d_ap * d_a;
    const int env = d_in <= d_out ? 1 : (d_in + d_out - 1) / d_out;
    spec.encoders.push_back(random_channel(d_in, d_out, env, mix_seed(cfg.seed, "encoder", static_cast<uint64_t>(i))));
  }
  for (int i = 0; i + 1 < cfg.n; ++i) {
    Rng drng(mix_seed(cfg.seed, "decoder", static_cast<uint64_t>(i)));
    const int ops = (d_b + cfg.f_alphabet - 1) / cfg.f_alphabet; // per outcome
    spec.decoders.push_back(instrument_from_isometry(drng, d_b * d_bp, d_bp, cfg.f_alphabet, ops));
  }

  const int d_meas = d_b * d_bp;
  if (d_meas % cfg.M != 0)
    throw std::invalid_argument("random POVM needs M to divide channel_out * bob_mem = " + std::to_string(d_meas));
  Rng prng(mix_seed(cfg.seed, "povm", 0));
  const Matrix u = prng.haar_unitary(d_meas);
  const int block = d_meas / cfg.M;
  for (int w = 0; w < cfg.M; ++w) {
    Matrix el = Matrix::Zero(d_meas, d_meas);
    for (int k = 0; k < block; ++k) {
      const Vector col = u.col(w * block + k);
      el += col * col.adjoint();
    }
    spec.povm.push_back(std::move(el));
  }

  spec.hamiltonian = number_operator(d_a);
  spec.energy_budget = std::nullopt;
  return spec;
}

} // namespace qfb
