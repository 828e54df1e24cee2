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

#ifndef QFB_CLI_HPP
#define QFB_CLI_HPP

#include <string>
#include <vector>

namespace qfb {

// Exit codes: 0 ok, 1 verification violation, 2 malformed input, 3 infeasible
// energy constraint, 4 resource (dimension cap) exceeded.
int cli_main(const std::vector<std::string>& args);
int cli_main(int argc, char** argv);

} // namespace qfb

#endif
