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

#include "qfb/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "qfb/bounds.hpp"
#include "qfb/errors.hpp"
#include "qfb/io.hpp"
#include "qfb/protocol.hpp"
#include "qfb/verify.hpp"

namespace qfb {

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitParse = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitResource = 4;

void apply_tolerance_overrides() {
  const char* env = std::getenv("QFB_TOL_OVERRIDE");
  if (!env || !*env) return;
  const json j = json::parse(env);
  auto set = [&](const char* key, double& field) {
    if (j.contains(key)) {
      field = j.at(key).get<double>();
      if (field <= 0 && std::string(key) != "abort_margin" && std::string(key) != "ineq")
        throw std::invalid_argument("tolerance override '" + std::string(key) + "' must be positive");
    }
  };
  Tolerances& t = tol();
  set("herm", t.herm);
  set("psd", t.psd);
  set("tr", t.tr);
  set("eig", t.eig);
  set("eq", t.eq);
  set("tp", t.tp);
  set("ineq", t.ineq);
  set("clip", t.clip);
  set("log_clip", t.log_clip);
  set("p_min", t.p_min);
  set("abort_margin", t.abort_margin);
}

// ---- bound -----------------------------------------------------------------------

struct BoundArgs {
  std::string named;
  std::string channel_file;
  int d = 2;
  double p = 0.0, q = 0.0, gamma = 0.0, eta = 1.0;
  int cutoff = 10;
  std::optional<double> ns;
  std::optional<double> energy;
  std::string hamiltonian_file;
  std::optional<int> rate_n;
  std::optional<double> rate_epsilon;
  int max_iters = 500;
  double gap_tol = 1e-6;
  std::string out;
};

int run_bound(const BoundArgs& args) {
  ChannelMixture mix;
  std::optional<EnergyConstraint> constraint;

  if (!args.named.empty()) {
    if (args.named == "erasure") {
      mix = make_erasure(args.d, args.p);
    } else if (args.named == "identity") {
      mix = ChannelMixture{{1.0}, {make_identity(args.d)}};
    } else if (args.named == "depolarizing") {
      mix = ChannelMixture{{1.0}, {make_depolarizing(args.d, args.q)}};
    } else if (args.named == "dephasing") {
      mix = ChannelMixture{{1.0}, {make_dephasing(args.p)}};
    } else if (args.named == "amplitude_damping") {
      mix = ChannelMixture{{1.0}, {make_amplitude_damping(args.gamma)}};
    } else if (args.named == "pure_loss") {
      mix = ChannelMixture{{1.0}, {make_truncated_pure_loss(args.eta, args.cutoff)}};
      if (args.ns) constraint = EnergyConstraint::capped(number_operator(args.cutoff + 1), *args.ns);
    } else {
      throw std::invalid_argument("unknown channel name '" + args.named + "'");
    }
  } else {
    const json j = read_json_file(args.channel_file);
    if (j.contains("weights"))
      mix = mixture_from_json(j);
    else
      mix = ChannelMixture{{1.0}, {channel_from_json(j)}};
  }

  if (args.energy) {
    HermitianObservable h = args.hamiltonian_file.empty()
                                ? number_operator(mix.dim_in())
                                : observable_from_json(read_json_file(args.hamiltonian_file));
    constraint = EnergyConstraint::capped(std::move(h), *args.energy);
  }
  if (!constraint) constraint = EnergyConstraint::none(mix.dim_in());

  FrankWolfeOptions opts;
  opts.max_iterations = args.max_iters;
  opts.gap_tolerance = args.gap_tol;
  const BoundReport report = max_avg_output_entropy(mix, *constraint, opts);

  std::printf("per-use bound: %.10f bits (gap %.3e, %d iterations)\n", report.value_bits,
              report.duality_gap_estimate, report.iterations);
  if (report.constraint_slack) std::printf("constraint slack: %.3e\n", *report.constraint_slack);
  if (args.named == "pure_loss")
    std::printf("optimizer top Fock level occupation (truncation diagnostic): %.3e\n",
                fock_tail_mass(report.optimizer));
  if (args.rate_n && args.rate_epsilon) {
    const double cap = feedback_rate_bound(*args.rate_n, *args.rate_epsilon, report.value_bits);
    std::printf("log2 M cap at n=%d, eps=%g: %.10f bits\n", *args.rate_n, *args.rate_epsilon, cap);
  }
  if (!args.out.empty()) write_json_file(args.out, bound_report_to_json(report));
  return kExitOk;
}

// ---- verify ----------------------------------------------------------------------

struct VerifyArgs {
  std::string suite;
  int trials = 500;
  int dims = 4;
  uint64_t seed = 0;
  int protocols = 20;
  int erasure_d = 2;
  double erasure_p = 0.25;
  std::string out;
  std::string replay_dir = ".";
  std::string replay_file;
};

int run_verify(const VerifyArgs& args) {
  if (!args.replay_file.empty()) {
    const json replay = read_json_file(args.replay_file);
    const double margin = replay_margin(replay);
    std::printf("replayed %s margin: %.12e\n", replay.at("check").get<std::string>().c_str(), margin);
    return margin < -tol().ineq ? kExitViolation : kExitOk;
  }

  CheckOptions copts;
  copts.trials = args.trials;
  copts.dims = args.dims;
  copts.seed = args.seed;
  copts.replay_dir = args.replay_dir;
  FleetOptions fopts;
  fopts.protocols = args.protocols;
  fopts.seed = args.seed;
  fopts.replay_dir = args.replay_dir;

  std::vector<CheckResult> results;
  auto want = [&](const std::string& name) { return args.suite == "all" || args.suite == name; };
  if (want("lemma1")) results.push_back(check_lemma1(copts));
  if (want("lemma2")) results.push_back(check_lemma2(copts));
  if (want("lemma3")) results.push_back(check_lemma3(copts));
  if (want("lemma3z")) results.push_back(check_lemma3_mixture(copts));
  if (want("thm1")) results.push_back(check_theorem1_fleet(fopts));
  if (want("thm2")) results.push_back(check_theorem2_fleet(fopts, make_erasure(args.erasure_d, args.erasure_p)));
  if (results.empty()) throw std::invalid_argument("unknown suite '" + args.suite + "'");

  bool ok = true;
  json out = json::array();
  for (const auto& r : results) {
    std::printf("%-8s trials %-5d violations %-3d worst margin %+.3e %s\n", r.name.c_str(), r.trials, r.violations,
                r.worst_margin, r.passed() ? "PASS" : "FAIL");
    if (r.aborted) std::printf("  genuine violation; instance dumped to %s\n", r.replay_path.c_str());
    ok = ok && r.passed();
    out.push_back(r.to_json());
  }
  if (!args.out.empty()) write_json_file(args.out, out);
  return ok ? kExitOk : kExitViolation;
}

// ---- simulate --------------------------------------------------------------------

struct SimulateArgs {
  std::string spec_file;
  bool random = false;
  int n = 2;
  int m = 2;
  int f_alphabet = 2;
  uint64_t seed = 0;
  std::string channel = "random"; // or "erasure"
  int d = 2;
  double p = 0.25;
  bool flattened = false;
  bool dump_states = false;
  int dim_cap = 64;
  std::string out;
  std::string format = "json";
};

int run_simulate(const SimulateArgs& args) {
  ProtocolSpec spec;
  if (!args.spec_file.empty()) {
    spec = protocol_spec_from_json(read_json_file(args.spec_file));
  } else if (args.random) {
    RandomSpecConfig cfg;
    cfg.n = args.n;
    cfg.M = args.m;
    cfg.f_alphabet = args.f_alphabet;
    cfg.seed = args.seed;
    if (args.channel == "erasure")
      cfg.channel = make_erasure(args.d, args.p);
    else if (args.channel != "random")
      throw std::invalid_argument("random spec channel must be 'random' or 'erasure'");
    spec = random_protocol_spec(cfg);
  } else {
    throw std::invalid_argument("simulate needs --spec FILE or --random");
  }

  RunOptions opts;
  opts.dim_cap = args.dim_cap;
  opts.keep_states = true;

  const bool as_mixture = spec.mixture() != nullptr && !args.flattened;
  const ProtocolTrace trace = as_mixture ? run_mixture_simulation(spec, opts) : run_purified(spec, opts);

  std::printf("error probability: %.10f\n", trace.error_probability);
  std::printf("average input energy: %.10f\n", trace.average_energy);

  CheckResult chain;
  if (as_mixture) {
    const ChannelMixture& mix = *spec.mixture();
    const BoundReport bound = max_avg_output_entropy(mix, EnergyConstraint::none(mix.dim_in()));
    chain = check_theorem2_chain(trace, mix, bound);
  } else {
    const KrausChannel ch = spec.flattened_channel();
    const BoundReport bound = max_output_entropy(ch, EnergyConstraint::none(ch.dim_in));
    chain = check_theorem1_chain(trace, ch, bound);
  }
  std::printf("%s: %s (worst link margin %+.3e)\n", chain.name.c_str(), chain.passed() ? "PASS" : "FAIL",
              chain.worst_margin);

  if (!args.out.empty()) {
    if (args.format == "csv") {
      std::ofstream f(args.out);
      if (!f) throw std::runtime_error("cannot open '" + args.out + "'");
      f << trace_to_csv(trace);
    } else {
      write_json_file(args.out, trace_to_json(trace, args.dump_states));
    }
  }
  return chain.passed() ? kExitOk : kExitViolation;
}

} // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"entropy bounds and protocol simulation for feedback-assisted classical communication"};
  app.require_subcommand(1);

  BoundArgs bound_args;
  CLI::App* bound = app.add_subcommand("bound", "compute the maximum (average) output entropy bound");
  auto* named_opt = bound->add_option("--named", bound_args.named,
                                      "identity|erasure|depolarizing|dephasing|amplitude_damping|pure_loss");
  bound->add_option("--channel-json", bound_args.channel_file, "channel or mixture JSON file")->excludes(named_opt);
  bound->add_option("--d", bound_args.d, "input dimension");
  bound->add_option("--p", bound_args.p, "erasure/dephasing probability");
  bound->add_option("--q", bound_args.q, "depolarizing strength");
  bound->add_option("--gamma", bound_args.gamma, "amplitude damping rate");
  bound->add_option("--eta", bound_args.eta, "pure-loss transmissivity");
  bound->add_option("--cutoff", bound_args.cutoff, "Fock-space cutoff");
  bound->add_option("--ns", bound_args.ns, "mean photon number budget (pure_loss)");
  bound->add_option("--energy", bound_args.energy, "mean energy budget");
  bound->add_option("--hamiltonian-json", bound_args.hamiltonian_file, "Hamiltonian JSON (default: number operator)");
  bound->add_option("--n", bound_args.rate_n, "channel uses for the rate cap");
  bound->add_option("--epsilon", bound_args.rate_epsilon, "error tolerance for the rate cap");
  bound->add_option("--max-iters", bound_args.max_iters, "optimizer iteration cap");
  bound->add_option("--gap-tol", bound_args.gap_tol, "duality gap stop (bits)");
  bound->add_option("--out", bound_args.out, "write the bound report JSON here");

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand("verify", "run randomized checks of the entropy inequalities");
  verify->add_option("suite", verify_args.suite, "lemma1|lemma2|lemma3|lemma3z|thm1|thm2|all");
  verify->add_option("--trials", verify_args.trials, "trials per lemma fleet");
  verify->add_option("--dims", verify_args.dims, "max per-system dimension");
  verify->add_option("--seed", verify_args.seed, "fleet seed");
  verify->add_option("--protocols", verify_args.protocols, "protocols per theorem fleet");
  verify->add_option("--erasure-d", verify_args.erasure_d, "erasure dimension for the thm2 fleet");
  verify->add_option("--erasure-p", verify_args.erasure_p, "erasure probability for the thm2 fleet");
  verify->add_option("--out", verify_args.out, "write CheckResult JSON here");
  verify->add_option("--replay-dir", verify_args.replay_dir, "directory for violation dumps");
  verify->add_option("--replay", verify_args.replay_file, "re-evaluate a dumped instance");

  SimulateArgs sim_args;
  CLI::App* simulate = app.add_subcommand("simulate", "run a feedback protocol and check its rate chain");
  auto* spec_opt = simulate->add_option("--spec", sim_args.spec_file, "protocol spec JSON file");
  simulate->add_flag("--random", sim_args.random, "generate a random protocol")->excludes(spec_opt);
  simulate->add_option("--n", sim_args.n, "rounds");
  simulate->add_option("--M", sim_args.m, "messages");
  simulate->add_option("--f-alphabet", sim_args.f_alphabet, "feedback alphabet size");
  simulate->add_option("--seed", sim_args.seed, "random spec seed");
  simulate->add_option("--channel", sim_args.channel, "random|erasure");
  simulate->add_option("--d", sim_args.d, "erasure input dimension");
  simulate->add_option("--p", sim_args.p, "erasure probability");
  simulate->add_flag("--flattened", sim_args.flattened, "flatten a mixture channel instead of simulating Z");
  simulate->add_flag("--dump-states", sim_args.dump_states, "include per-round states in the JSON trace");
  simulate->add_option("--dim-cap", sim_args.dim_cap, "per-branch dimension cap");
  simulate->add_option("--out", sim_args.out, "write the trace here");
  simulate->add_option("--format", sim_args.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));

  try {
    apply_tolerance_overrides();
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (bound->parsed()) {
      if (bound_args.named.empty() && bound_args.channel_file.empty())
        throw std::invalid_argument("bound needs --named or --channel-json");
      return run_bound(bound_args);
    }
    if (verify->parsed()) return run_verify(verify_args);
    if (simulate->parsed()) return run_simulate(sim_args);
    return kExitParse;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return kExitOk; // --help
    std::fprintf(stderr, "%s\n", e.what());
    return kExitParse;
  } catch (const infeasible_error& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kExitInfeasible;
  } catch (const dimension_cap_error& e) {
    std::fprintf(stderr, "resource: %s\n", e.what());
    return kExitResource;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitParse;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args);
}

} // namespace qfb
