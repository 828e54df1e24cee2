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

#ifndef QFB_IO_HPP
#define QFB_IO_HPP

#include <string>

#include "json.hpp"
#include "qfb/bounds.hpp"
#include "qfb/channels.hpp"
#include "qfb/cq.hpp"
#include "qfb/protocol.hpp"

namespace qfb {

// Complex entries are serialized as [re, im] pairs; matrices as row-major
// nested arrays of those pairs. All doubles round-trip exactly (shortest
// decimal representation that re-parses to the same bits).

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json layout_to_json(const SystemLayout& layout);
SystemLayout layout_from_json(const nlohmann::json& j);

nlohmann::json density_to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const nlohmann::json& j);

nlohmann::json observable_to_json(const HermitianObservable& h);
HermitianObservable observable_from_json(const nlohmann::json& j);

nlohmann::json channel_to_json(const KrausChannel& ch);
KrausChannel channel_from_json(const nlohmann::json& j);

nlohmann::json mixture_to_json(const ChannelMixture& mix);
ChannelMixture mixture_from_json(const nlohmann::json& j);

nlohmann::json instrument_to_json(const Instrument& inst);
Instrument instrument_from_json(const nlohmann::json& j);

nlohmann::json locc_to_json(const OneWayLOCC& m);
OneWayLOCC locc_from_json(const nlohmann::json& j);

nlohmann::json ensemble_to_json(const CQEnsemble& e);
CQEnsemble ensemble_from_json(const nlohmann::json& j);

nlohmann::json protocol_spec_to_json(const ProtocolSpec& spec);
ProtocolSpec protocol_spec_from_json(const nlohmann::json& j);

nlohmann::json trace_to_json(const ProtocolTrace& trace, bool dump_states = false);
std::string trace_to_csv(const ProtocolTrace& trace);

nlohmann::json bound_report_to_json(const BoundReport& report);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

} // namespace qfb

#endif
