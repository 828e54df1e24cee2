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

#ifndef QFB_ERRORS_HPP
#define QFB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qfb {

// Energy-constrained feasible set is empty (budget below ground-state energy).
class infeasible_error : public std::runtime_error {
 public:
  explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

// A simulation would exceed the configured per-branch dimension cap.
class dimension_cap_error : public std::runtime_error {
 public:
  explicit dimension_cap_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace qfb

#endif
