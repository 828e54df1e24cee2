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

#include "qfb/verify.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "qfb/io.hpp"
#include "qfb/random.hpp"

namespace qfb {

using nlohmann::json;

nlohmann::json CheckResult::to_json(bool include_margins) const {
  json j{{"name", name},         {"trials", trials},   {"violations", violations},
         {"worst_margin", worst_margin}, {"seed", seed}, {"aborted", aborted}};
  if (!replay_path.empty()) j["replay"] = replay_path;
  if (include_margins) j["margins"] = margins;
  return j;
}

namespace {

// One randomized trial: returns the margin and, on demand, the serialized
// instance for the replay file.
using TrialFn = std::function<double(uint64_t trial_seed, json* instance)>;

CheckResult run_trials(const std::string& name, const CheckOptions& opts, const TrialFn& trial) {
  CheckResult res;
  res.name = name;
  res.seed = opts.seed;
  res.worst_margin = std::numeric_limits<double>::infinity();
  for (int t = 0; t < opts.trials; ++t) {
    const uint64_t trial_seed = mix_seed(opts.seed, name, static_cast<uint64_t>(t));
    const double margin = trial(trial_seed, nullptr);
    res.trials++;
    res.margins.push_back(margin);
    res.worst_margin = std::min(res.worst_margin, margin);
    if (margin < -tol().ineq) res.violations++;
    if (margin < -tol().abort_margin) {
      // A genuine counterexample would falsify the underlying statement;
      // preserve the instance for replay and stop.
      json instance;
      trial(trial_seed, &instance);
      json replay{{"check", name}, {"seed", opts.seed}, {"trial", t}, {"margin", margin}, {"instance", instance}};
      res.replay_path = opts.replay_dir + "/replay_" + name + "_trial" + std::to_string(t) + ".json";
      write_json_file(res.replay_path, replay);
      res.aborted = true;
      break;
    }
  }
  return res;
}

CQEnsemble apply_channel_to_ensemble(const KrausChannel& ch, const CQEnsemble& e, const std::string& on) {
  CQEnsemble out;
  out.registers = e.registers;
  for (const auto& [label, b] : e.branches) out.branches.emplace(label, CQBranch{b.prob, apply(ch, b.state, on)});
  return out;
}

// ---- random instances -----------------------------------------------------------

OneWayLOCC random_locc(Rng& rng, int dim_a, int dim_b) {
  const int outcomes = rng.uniform_int(2, 3);
  const int dim_a_out = dim_a + rng.uniform_int(0, 1); // sometimes a strict isometry
  OneWayLOCC m;
  const Matrix w = rng.haar_isometry(dim_b * outcomes, dim_b);
  for (int x = 0; x < outcomes; ++x) {
    OneWayLOCC::Outcome o;
    o.label = std::to_string(x);
    o.sender_isometry = rng.haar_isometry(dim_a_out, dim_a);
    Matrix v(dim_b, dim_b);
    for (int b = 0; b < dim_b; ++b) v.row(b) = w.row(b * outcomes + x);
    o.receiver_op = std::move(v);
    m.outcomes.push_back(std::move(o));
  }
  return m;
}

CQEnsemble random_cq_ensemble(Rng& rng, const SystemLayout& layout, bool pure_conditionals, int z_size = 0) {
  CQEnsemble e;
  const int w = rng.uniform_int(2, 3);
  const int f = rng.uniform_int(1, 2);
  e.registers = {{"W", w}, {"F", f}};
  if (z_size > 0) e.registers.push_back({"Z", z_size});
  const int branches = w * f * std::max(z_size, 1);
  const std::vector<double> p = rng.dirichlet_uniform(branches);
  int i = 0;
  for (int wi = 0; wi < w; ++wi)
    for (int fi = 0; fi < f; ++fi)
      for (int zi = 0; zi < std::max(z_size, 1); ++zi) {
        std::vector<int> label = {wi, fi};
        if (z_size > 0) label.push_back(zi);
        DensityMatrix state = pure_conditionals
                                  ? rng.random_pure(layout).to_density()
                                  : rng.random_density(layout, rng.uniform_int(1, layout.total_dim()));
        e.branches.emplace(std::move(label), CQBranch{p[static_cast<size_t>(i++)], std::move(state)});
      }
  return e;
}

// ---- lemma margins on explicit instances ----------------------------------------

double lemma1_margin(const PureState& phi, const OneWayLOCC& m) {
  const CQEnsemble e = CQEnsemble::from_state(phi.to_density());
  const double s_b = entropy_of(e, {}, {"B"});
  const CQEnsemble theta = apply_1wlocc(m, e, {"A"}, {"B"}, "X");
  return s_b - conditional_entropy(theta, {"B"}, {"X"});
}

double lemma2_margin(const CQEnsemble& tau, const OneWayLOCC& m) {
  const double before = monotone(tau, "W", {"F"}, {"B"});
  const CQEnsemble theta = apply_1wlocc(m, tau, {"A"}, {"B"}, "X");
  return before - monotone(theta, "W", {"F", "X"}, {"B"});
}

double lemma3_margin(const CQEnsemble& tau, const KrausChannel& ch) {
  const double before = monotone(tau, "W", {"F"}, {"Bp"});
  const CQEnsemble omega = apply_channel_to_ensemble(ch, tau, "A");
  const double after = monotone(omega, "W", {"F"}, {"A", "Bp"});
  const double s_b = entropy_of(omega, {}, {"A"});
  return s_b - (after - before);
}

double lemma3_mixture_margin(const CQEnsemble& tau, const std::vector<KrausChannel>& components) {
  const double before = monotone(tau, "W", {"F", "Z"}, {"Bp"});
  CQEnsemble omega;
  omega.registers = tau.registers;
  const int z_pos = tau.register_index("Z");
  for (const auto& [label, b] : tau.branches) {
    const KrausChannel& ch = components[static_cast<size_t>(label[static_cast<size_t>(z_pos)])];
    omega.branches.emplace(label, CQBranch{b.prob, apply(ch, b.state, "A")});
  }
  const double after = monotone(omega, "W", {"F", "Z"}, {"A", "Bp"});
  const double s_b_given_z = conditional_entropy(omega, {"A"}, {"Z"});
  return s_b_given_z - (after - before);
}

} // namespace

// ---- lemma checks -----------------------------------------------------------------

CheckResult check_lemma1(const CheckOptions& opts) {
  return run_trials("lemma1", opts, [&](uint64_t seed, json* instance) {
    Rng rng(seed);
    const int da = rng.uniform_int(2, opts.dims);
    const int db = rng.uniform_int(2, opts.dims);
    const PureState phi = rng.random_pure(SystemLayout({{"A", da}, {"B", db}}));
    const OneWayLOCC m = random_locc(rng, da, db);
    if (instance)
      *instance = json{{"phi", density_to_json(phi.to_density())}, {"locc", locc_to_json(m)}};
    return lemma1_margin(phi, m);
  });
}

CheckResult check_lemma2(const CheckOptions& opts) {
  return run_trials("lemma2", opts, [&](uint64_t seed, json* instance) {
    Rng rng(seed);
    const int da = rng.uniform_int(2, opts.dims);
    const int db = rng.uniform_int(2, opts.dims);
    const CQEnsemble tau = random_cq_ensemble(rng, SystemLayout({{"A", da}, {"B", db}}), true);
    const OneWayLOCC m = random_locc(rng, da, db);
    if (instance) *instance = json{{"ensemble", ensemble_to_json(tau)}, {"locc", locc_to_json(m)}};
    return lemma2_margin(tau, m);
  });
}

CheckResult check_lemma3(const CheckOptions& opts) {
  return run_trials("lemma3", opts, [&](uint64_t seed, json* instance) {
    Rng rng(seed);
    const int da = rng.uniform_int(2, opts.dims);
    const int db = rng.uniform_int(2, opts.dims);
    const int dbp = rng.uniform_int(2, opts.dims);
    const CQEnsemble tau = random_cq_ensemble(rng, SystemLayout({{"A", da}, {"Bp", dbp}}), false);
    const int env = std::max((da + db - 1) / db, rng.uniform_int(1, 2));
    const KrausChannel ch = random_channel(da, db, env, mix_seed(seed, 1));
    if (instance) *instance = json{{"ensemble", ensemble_to_json(tau)}, {"channel", channel_to_json(ch)}};
    return lemma3_margin(tau, ch);
  });
}

CheckResult check_lemma3_mixture(const CheckOptions& opts) {
  return run_trials("lemma3z", opts, [&](uint64_t seed, json* instance) {
    Rng rng(seed);
    const int da = rng.uniform_int(2, opts.dims);
    const int db = rng.uniform_int(2, opts.dims);
    const int dbp = rng.uniform_int(2, opts.dims);
    const int z = rng.uniform_int(2, 3);
    const CQEnsemble tau = random_cq_ensemble(rng, SystemLayout({{"A", da}, {"Bp", dbp}}), false, z);
    std::vector<KrausChannel> components;
    for (int i = 0; i < z; ++i) {
      const int env = std::max((da + db - 1) / db, rng.uniform_int(1, 2));
      components.push_back(random_channel(da, db, env, mix_seed(seed, static_cast<uint64_t>(i + 2))));
    }
    if (instance) {
      json comps = json::array();
      for (const auto& c : components) comps.push_back(channel_to_json(c));
      *instance = json{{"ensemble", ensemble_to_json(tau)}, {"components", std::move(comps)}};
    }
    return lemma3_mixture_margin(tau, components);
  });
}

// ---- theorem chains ---------------------------------------------------------------

namespace {

struct ChainLinks {
  double a = 0, b = 0, c = 0, d = 0, e = 0;
};

// Links shared by the plain and mixture chains; `per_round_cap[i]` is the
// amortized entropy bound for round i (S(B_i) or S(B_i|Z_i)) and `sum_cap`
// its channel-average counterpart.
ChainLinks chain_links(const ProtocolTrace& trace, double per_use_bound,
                       const std::vector<double>& per_round_cap, double avg_output_entropy_at_mean) {
  ChainLinks links;
  const double eps = trace.error_probability;
  const double rate = (1.0 - eps) * std::log2(static_cast<double>(trace.M));
  const double h2 = binary_entropy(std::min(std::max(eps, 0.0), 1.0));
  const double mi = final_mutual_information(trace);

  links.a = mi + h2 - rate;

  double telescope = std::numeric_limits<double>::infinity();
  telescope = std::min(telescope, -trace.rounds.front().monotone_before); // initial zero
  for (size_t i = 0; i + 1 < trace.rounds.size(); ++i)
    telescope = std::min(telescope, trace.rounds[i].monotone_after - trace.rounds[i + 1].monotone_before);
  double cap_sum = 0.0;
  for (size_t i = 0; i < trace.rounds.size(); ++i) {
    telescope = std::min(telescope, per_round_cap[i] - (trace.rounds[i].monotone_after -
                                                        trace.rounds[i].monotone_before));
    cap_sum += per_round_cap[i];
  }
  telescope = std::min(telescope, trace.rounds.back().monotone_after - mi);
  links.b = telescope;

  links.c = trace.n * avg_output_entropy_at_mean - cap_sum;
  links.d = trace.n * (per_use_bound - avg_output_entropy_at_mean);
  links.e = trace.n * per_use_bound + h2 - rate;
  return links;
}

// The chain must consume exactly the recorded monotone values; recomputing
// them from the snapshots guards against drift between recording and checking.
void recompute_rounds(const ProtocolTrace& trace) {
  if (trace.states.empty()) throw std::invalid_argument("chain check needs a keep_states trace");
  auto recompute = [&](const CQEnsemble& view) {
    std::vector<std::string> f_regs;
    for (const auto& r : view.registers)
      if (r.name != "W") f_regs.push_back(r.name);
    return monotone(view, "W", f_regs, view.quantum_layout().labels());
  };
  for (size_t idx = 0; idx < trace.states.size(); ++idx) {
    const double before = recompute(trace.states[idx].omega_bob);
    const double after = recompute(trace.states[idx].rho_bob);
    if (std::abs(before - trace.rounds[idx].monotone_before) > tol().eq ||
        std::abs(after - trace.rounds[idx].monotone_after) > tol().eq)
      throw std::runtime_error("recorded monotone values drifted from their snapshots");
  }
}

CheckResult links_to_result(const std::string& name, const ChainLinks& links, uint64_t seed) {
  CheckResult res;
  res.name = name;
  res.seed = seed;
  res.trials = 1;
  res.margins = {links.a, links.b, links.c, links.d, links.e};
  res.worst_margin = std::numeric_limits<double>::infinity();
  for (double m : res.margins) {
    res.worst_margin = std::min(res.worst_margin, m);
    if (m < -tol().ineq) res.violations++;
  }
  return res;
}

} // namespace

CheckResult check_theorem1_chain(const ProtocolTrace& trace, const KrausChannel& channel, const BoundReport& bound) {
  if (!trace.purified || trace.mixture)
    throw std::invalid_argument("theorem-1 chain needs a purified non-mixture trace");
  if (channel.dim_in != trace.average_input.dim() || bound.optimizer.dim() != channel.dim_in)
    throw std::invalid_argument("trace, channel and bound dimensions do not match");

  std::vector<double> caps;
  for (const auto& r : trace.rounds) caps.push_back(r.channel_output_entropy);
  const double s_mean = avg_output_entropy(ChannelMixture{{1.0}, {channel}}, trace.average_input.mat);
  recompute_rounds(trace);
  return links_to_result("thm1-chain", chain_links(trace, bound.value_bits, caps, s_mean), 0);
}

CheckResult check_theorem2_chain(const ProtocolTrace& trace, const ChannelMixture& mix, const BoundReport& bound) {
  if (!trace.purified || !trace.mixture)
    throw std::invalid_argument("theorem-2 chain needs a mixture-simulation trace");
  if (mix.dim_in() != trace.average_input.dim() || bound.optimizer.dim() != mix.dim_in())
    throw std::invalid_argument("trace, mixture and bound dimensions do not match");

  std::vector<double> caps;
  for (const auto& r : trace.rounds) {
    if (!r.conditional_output_entropy)
      throw std::invalid_argument("mixture trace is missing conditional output entropies");
    caps.push_back(*r.conditional_output_entropy);
  }
  const double s_mean = avg_output_entropy(mix, trace.average_input.mat);
  recompute_rounds(trace);
  return links_to_result("thm2-chain", chain_links(trace, bound.value_bits, caps, s_mean), 0);
}

// ---- protocol fleets ----------------------------------------------------------------

CheckResult check_theorem1_fleet(const FleetOptions& opts) {
  CheckResult res;
  res.name = "thm1";
  res.seed = opts.seed;
  res.worst_margin = std::numeric_limits<double>::infinity();
  for (int p = 0; p < opts.protocols; ++p) {
    const uint64_t seed = mix_seed(opts.seed, "thm1", static_cast<uint64_t>(p));
    RandomSpecConfig cfg;
    cfg.seed = seed;
    cfg.n = 1 + static_cast<int>(seed % 3);
    cfg.M = (seed >> 8) % 2 == 0 ? 2 : 4;
    const ProtocolSpec spec = random_protocol_spec(cfg);
    RunOptions ropts;
    ropts.dim_cap = opts.dim_cap;
    const ProtocolTrace trace = run_purified(spec, ropts);
    const KrausChannel& channel = std::get<KrausChannel>(spec.channel);
    const BoundReport bound = max_output_entropy(channel, EnergyConstraint::none(channel.dim_in));
    CheckResult one = check_theorem1_chain(trace, channel, bound);
    res.trials++;
    res.violations += one.violations;
    for (double m : one.margins) {
      res.margins.push_back(m);
      res.worst_margin = std::min(res.worst_margin, m);
    }
    if (one.worst_margin < -tol().abort_margin) {
      res.replay_path = opts.replay_dir + "/replay_thm1_protocol" + std::to_string(p) + ".json";
      write_json_file(res.replay_path, json{{"check", "thm1"},
                                            {"seed", opts.seed},
                                            {"protocol", p},
                                            {"margin", one.worst_margin},
                                            {"instance", protocol_spec_to_json(spec)}});
      res.aborted = true;
      break;
    }
  }
  return res;
}

CheckResult check_theorem2_fleet(const FleetOptions& opts, const ChannelMixture& mix) {
  CheckResult res;
  res.name = "thm2";
  res.seed = opts.seed;
  res.worst_margin = std::numeric_limits<double>::infinity();
  const BoundReport bound = max_avg_output_entropy(mix, EnergyConstraint::none(mix.dim_in()));
  for (int p = 0; p < opts.protocols; ++p) {
    const uint64_t seed = mix_seed(opts.seed, "thm2", static_cast<uint64_t>(p));
    RandomSpecConfig cfg;
    cfg.seed = seed;
    cfg.n = 2;
    cfg.M = 2;
    cfg.channel = mix;
    const ProtocolSpec spec = random_protocol_spec(cfg);
    RunOptions ropts;
    ropts.dim_cap = opts.dim_cap;
    const ProtocolTrace trace = run_mixture_simulation(spec, ropts);
    CheckResult one = check_theorem2_chain(trace, mix, bound);

    // Z-marginalization consistency against the flattened-channel run.
    const ProtocolTrace flat = run_purified(spec, ropts);
    std::vector<std::string> z_regs;
    for (int i = 1; i <= spec.n; ++i) z_regs.push_back("Z" + std::to_string(i));
    const double deviation = compare_real_traces(trace, flat, z_regs);
    one.margins.push_back(1e-8 - deviation);

    res.trials++;
    for (double m : one.margins) {
      res.margins.push_back(m);
      res.worst_margin = std::min(res.worst_margin, m);
      if (m < -tol().ineq) res.violations++;
    }
    if (one.worst_margin < -tol().abort_margin || deviation > 1e-6) {
      res.replay_path = opts.replay_dir + "/replay_thm2_protocol" + std::to_string(p) + ".json";
      write_json_file(res.replay_path, json{{"check", "thm2"},
                                            {"seed", opts.seed},
                                            {"protocol", p},
                                            {"margin", one.worst_margin},
                                            {"instance", protocol_spec_to_json(spec)}});
      res.aborted = true;
      break;
    }
  }
  return res;
}

// ---- replay --------------------------------------------------------------------------

double replay_margin(const nlohmann::json& replay) {
  const std::string check = replay.at("check").get<std::string>();
  const json& instance = replay.at("instance");
  if (check == "lemma1") {
    const DensityMatrix phi = density_from_json(instance.at("phi"));
    const EighResult es = eigh(phi.mat);
    PureState psi{phi.layout, es.eigenvectors.col(0)};
    return lemma1_margin(psi, locc_from_json(instance.at("locc")));
  }
  if (check == "lemma2")
    return lemma2_margin(ensemble_from_json(instance.at("ensemble")), locc_from_json(instance.at("locc")));
  if (check == "lemma3")
    return lemma3_margin(ensemble_from_json(instance.at("ensemble")), channel_from_json(instance.at("channel")));
  if (check == "lemma3z") {
    std::vector<KrausChannel> components;
    for (const auto& c : instance.at("components")) components.push_back(channel_from_json(c));
    return lemma3_mixture_margin(ensemble_from_json(instance.at("ensemble")), components);
  }
  if (check == "thm1") {
    const ProtocolSpec spec = protocol_spec_from_json(instance);
    RunOptions ropts;
    ropts.dim_cap = 256;
    const ProtocolTrace trace = run_purified(spec, ropts);
    const KrausChannel& channel = std::get<KrausChannel>(spec.channel);
    const BoundReport bound = max_output_entropy(channel, EnergyConstraint::none(channel.dim_in));
    return check_theorem1_chain(trace, channel, bound).worst_margin;
  }
  if (check == "thm2") {
    const ProtocolSpec spec = protocol_spec_from_json(instance);
    RunOptions ropts;
    ropts.dim_cap = 256;
    const ProtocolTrace trace = run_mixture_simulation(spec, ropts);
    const ChannelMixture& mix = *spec.mixture();
    const BoundReport bound = max_avg_output_entropy(mix, EnergyConstraint::none(mix.dim_in()));
    return check_theorem2_chain(trace, mix, bound).worst_margin;
  }
  throw std::invalid_argument("unknown replay check '" + check + "'");
}

} // namespace qfb
