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

#include "qfb/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace qfb {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("matrix JSON must be a non-empty array of rows");
  const size_t rows = j.size();
  const size_t cols = j.at(0).size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (size_t r = 0; r < rows; ++r) {
    const json& row = j.at(r);
    if (row.size() != cols) throw std::invalid_argument("matrix JSON rows have uneven lengths");
    for (size_t c = 0; c < cols; ++c) {
      const json& z = row.at(c);
      if (!z.is_array() || z.size() != 2) throw std::invalid_argument("complex entries must be [re, im] pairs");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          Complex(z.at(0).get<double>(), z.at(1).get<double>());
    }
  }
  return m;
}

json layout_to_json(const SystemLayout& layout) {
  json out = json::array();
  for (const auto& f : layout.factors()) out.push_back(json::array({f.label, f.dim}));
  return out;
}

SystemLayout layout_from_json(const json& j) {
  std::vector<Factor> fs;
  for (const auto& f : j) fs.push_back({f.at(0).get<std::string>(), f.at(1).get<int>()});
  return SystemLayout(fs);
}

json density_to_json(const DensityMatrix& rho) {
  return json{{"layout", layout_to_json(rho.layout)}, {"entries", matrix_to_json(rho.mat)}};
}

DensityMatrix density_from_json(const json& j) {
  return DensityMatrix::validated(layout_from_json(j.at("layout")), matrix_from_json(j.at("entries")));
}

json observable_to_json(const HermitianObservable& h) {
  return json{{"layout", layout_to_json(h.layout)}, {"entries", matrix_to_json(h.mat)}};
}

HermitianObservable observable_from_json(const json& j) {
  HermitianObservable h{layout_from_json(j.at("layout")), matrix_from_json(j.at("entries"))};
  h.validate();
  return h;
}

json channel_to_json(const KrausChannel& ch) {
  json kraus = json::array();
  for (const auto& k : ch.kraus) kraus.push_back(matrix_to_json(k));
  return json{{"dim_in", ch.dim_in}, {"dim_out", ch.dim_out}, {"kraus", std::move(kraus)}};
}

KrausChannel channel_from_json(const json& j) {
  KrausChannel ch{j.at("dim_in").get<int>(), j.at("dim_out").get<int>(), {}};
  for (const auto& k : j.at("kraus")) ch.kraus.push_back(matrix_from_json(k));
  ch.validate();
  return ch;
}

json mixture_to_json(const ChannelMixture& mix) {
  json comps = json::array();
  for (const auto& c : mix.components) comps.push_back(channel_to_json(c));
  return json{{"dim_in", mix.dim_in()},
              {"dim_out", mix.dim_out()},
              {"weights", mix.weights},
              {"components", std::move(comps)}};
}

ChannelMixture mixture_from_json(const json& j) {
  ChannelMixture mix;
  mix.weights = j.at("weights").get<std::vector<double>>();
  for (const auto& c : j.at("components")) mix.components.push_back(channel_from_json(c));
  mix.validate();
  return mix;
}

json instrument_to_json(const Instrument& inst) {
  json outcomes = json::array();
  for (const auto& o : inst.outcomes) {
    json kraus = json::array();
    for (const auto& k : o.kraus) kraus.push_back(matrix_to_json(k));
    outcomes.push_back(json{{"label", o.label}, {"kraus", std::move(kraus)}});
  }
  return json{{"dim_in", inst.dim_in}, {"dim_out", inst.dim_out}, {"outcomes", std::move(outcomes)}};
}

Instrument instrument_from_json(const json& j) {
  Instrument inst;
  inst.dim_in = j.at("dim_in").get<int>();
  inst.dim_out = j.at("dim_out").get<int>();
  for (const auto& o : j.at("outcomes")) {
    Instrument::Outcome outcome;
    outcome.label = o.at("label").get<std::string>();
    for (const auto& k : o.at("kraus")) outcome.kraus.push_back(matrix_from_json(k));
    inst.outcomes.push_back(std::move(outcome));
  }
  inst.validate();
  return inst;
}

json locc_to_json(const OneWayLOCC& m) {
  json outcomes = json::array();
  for (const auto& o : m.outcomes)
    outcomes.push_back(json{{"label", o.label},
                            {"sender_isometry", matrix_to_json(o.sender_isometry)},
                            {"receiver_op", matrix_to_json(o.receiver_op)}});
  return json{{"outcomes", std::move(outcomes)}};
}

OneWayLOCC locc_from_json(const json& j) {
  OneWayLOCC m;
  for (const auto& o : j.at("outcomes"))
    m.outcomes.push_back({o.at("label").get<std::string>(), matrix_from_json(o.at("sender_isometry")),
                          matrix_from_json(o.at("receiver_op"))});
  m.validate();
  return m;
}

json ensemble_to_json(const CQEnsemble& e) {
  json regs = json::array();
  for (const auto& r : e.registers) regs.push_back(json::array({r.name, r.size}));
  json branches = json::array();
  for (const auto& [label, b] : e.branches)
    branches.push_back(json{{"label", label}, {"prob", b.prob}, {"state", matrix_to_json(b.state.mat)}});
  return json{{"registers", std::move(regs)},
              {"layout", layout_to_json(e.quantum_layout())},
              {"branches", std::move(branches)}};
}

CQEnsemble ensemble_from_json(const json& j) {
  CQEnsemble e;
  for (const auto& r : j.at("registers")) e.registers.push_back({r.at(0).get<std::string>(), r.at(1).get<int>()});
  const SystemLayout layout = layout_from_json(j.at("layout"));
  for (const auto& b : j.at("branches"))
    e.branches.emplace(b.at("label").get<std::vector<int>>(),
                       CQBranch{b.at("prob").get<double>(), DensityMatrix{layout, matrix_from_json(b.at("state"))}});
  e.validate();
  return e;
}

json protocol_spec_to_json(const ProtocolSpec& spec) {
  json j;
  j["n"] = spec.n;
  j["M"] = spec.M;
  if (const auto* mix = spec.mixture())
    j["channel"] = json{{"mixture", mixture_to_json(*mix)}};
  else
    j["channel"] = channel_to_json(std::get<KrausChannel>(spec.channel));
  json bob = json::array();
  for (const auto& [p, s] : spec.initial_bob) bob.push_back(json{{"prob", p}, {"state", density_to_json(s)}});
  j["initial_bob"] = std::move(bob);
  json codes = json::array();
  for (const auto& c : spec.codewords) codes.push_back(density_to_json(c));
  j["codewords"] = std::move(codes);
  json encs = json::array();
  for (const auto& e : spec.encoders) encs.push_back(channel_to_json(e));
  j["encoders"] = std::move(encs);
  json decs = json::array();
  for (const auto& d : spec.decoders) decs.push_back(instrument_to_json(d));
  j["decoders"] = std::move(decs);
  json povm = json::array();
  for (const auto& el : spec.povm) povm.push_back(matrix_to_json(el));
  j["povm"] = std::move(povm);
  j["hamiltonian"] = observable_to_json(spec.hamiltonian);
  if (spec.energy_budget)
    j["energy_budget"] = *spec.energy_budget;
  else
    j["energy_budget"] = nullptr;
  return j;
}

ProtocolSpec protocol_spec_from_json(const json& j) {
  ProtocolSpec spec;
  spec.n = j.at("n").get<int>();
  spec.M = j.at("M").get<int>();
  if (j.at("channel").contains("mixture"))
    spec.channel = mixture_from_json(j.at("channel").at("mixture"));
  else
    spec.channel = channel_from_json(j.at("channel"));
  for (const auto& b : j.at("initial_bob"))
    spec.initial_bob.emplace_back(b.at("prob").get<double>(), density_from_json(b.at("state")));
  for (const auto& c : j.at("codewords")) spec.codewords.push_back(density_from_json(c));
  for (const auto& e : j.at("encoders")) spec.encoders.push_back(channel_from_json(e));
  for (const auto& d : j.at("decoders")) spec.decoders.push_back(instrument_from_json(d));
  for (const auto& el : j.at("povm")) spec.povm.push_back(matrix_from_json(el));
  spec.hamiltonian = observable_from_json(j.at("hamiltonian"));
  if (!j.at("energy_budget").is_null()) spec.energy_budget = j.at("energy_budget").get<double>();
  spec.validate();
  return spec;
}

json trace_to_json(const ProtocolTrace& trace, bool dump_states) {
  json rounds = json::array();
  for (const auto& r : trace.rounds) {
    json rec{{"round", r.round},
             {"monotone_before", r.monotone_before},
             {"monotone_after", r.monotone_after},
             {"input_energy", r.input_energy},
             {"channel_output_entropy", r.channel_output_entropy}};
    if (r.conditional_output_entropy) rec["conditional_output_entropy"] = *r.conditional_output_entropy;
    rounds.push_back(std::move(rec));
  }
  json joint = json::array();
  for (Eigen::Index r = 0; r < trace.final_joint.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < trace.final_joint.cols(); ++c) row.push_back(trace.final_joint(r, c));
    joint.push_back(std::move(row));
  }
  json j{{"n", trace.n},
         {"M", trace.M},
         {"purified", trace.purified},
         {"mixture", trace.mixture},
         {"rounds", std::move(rounds)},
         {"error_probability", trace.error_probability},
         {"average_energy", trace.average_energy},
         {"final_joint", std::move(joint)},
         {"average_input", density_to_json(trace.average_input)}};
  if (!trace.z_probs.empty()) j["z_probs"] = trace.z_probs;
  if (dump_states) {
    json states = json::array();
    for (const auto& s : trace.states)
      states.push_back(json{{"omega_bob", ensemble_to_json(s.omega_bob)},
                            {"rho_bob", ensemble_to_json(s.rho_bob)},
                            {"omega_real", ensemble_to_json(s.omega_real)},
                            {"rho_real", ensemble_to_json(s.rho_real)}});
    j["states"] = std::move(states);
  }
  return j;
}

std::string trace_to_csv(const ProtocolTrace& trace) {
  std::string out =
      "round,monotone_before,monotone_after,input_energy,channel_output_entropy,conditional_output_entropy\n";
  char buf[512];
  for (const auto& r : trace.rounds) {
    if (r.conditional_output_entropy)
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.round, r.monotone_before,
                    r.monotone_after, r.input_energy, r.channel_output_entropy, *r.conditional_output_entropy);
    else
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,\n", r.round, r.monotone_before, r.monotone_after,
                    r.input_energy, r.channel_output_entropy);
    out += buf;
  }
  return out;
}

json bound_report_to_json(const BoundReport& report) {
  json diag = json::array();
  for (int i = 0; i < report.optimizer.dim(); ++i) diag.push_back(report.optimizer.mat(i, i).real());
  json j{{"value_bits", report.value_bits},
         {"iterations", report.iterations},
         {"gap", report.duality_gap_estimate},
         {"optimizer_diag", std::move(diag)}};
  if (report.constraint_slack)
    j["constraint_slack"] = *report.constraint_slack;
  else
    j["constraint_slack"] = nullptr;
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  json j;
  in >> j;
  return j;
}

} // namespace qfb
