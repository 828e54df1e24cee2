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

#ifndef QFB_TOLERANCES_HPP
#define QFB_TOLERANCES_HPP

namespace qfb {

// Numerical tolerances for double precision at total dimensions <= 64.
// All entropy-like quantities are in bits (base-2 logarithms).
struct Tolerances {
  double herm = 1e-10;     // Hermiticity defect, max abs entry of M - M^dag
  double psd = 1e-9;       // eigenvalue floor; below -psd is an error, not roundoff
  double tr = 1e-9;        // trace / norm / probability-sum defect
  double eig = 1e-9;       // eigendecomposition reconstruction residual
  double eq = 1e-8;        // equality of two computed quantities
  double tp = 1e-9;        // trace-preservation / isometry defect
  double ineq = 1e-7;      // inequality slack in verification checks (bits)
  double clip = 1e-12;     // eigenvalues in [-psd, clip] are treated as 0 in entropies
  double log_clip = 1e-12; // eigenvalue floor inside gradient logarithms
  double p_min = 1e-12;    // classical branches below this probability are pruned
  double abort_margin = 1e-5; // a margin below -abort_margin is a genuine violation
};

// Process-wide tolerances. The CLI may override fields at startup (before any
// computation) via the QFB_TOL_OVERRIDE environment variable.
Tolerances& tol();

} // namespace qfb

#endif
