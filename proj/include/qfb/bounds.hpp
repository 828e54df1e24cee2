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

#ifndef QFB_BOUNDS_HPP
#define QFB_BOUNDS_HPP

#include <optional>

#include "qfb/channels.hpp"
#include "qfb/states.hpp"

namespace qfb {

// Mean-energy cap Tr{H rho} <= budget on the channel input.
struct EnergyConstraint {
  HermitianObservable hamiltonian;
  double budget = 0.0;
  bool unconstrained = true;

  static EnergyConstraint none(int dim_in);
  static EnergyConstraint capped(HermitianObservable h, double budget);
  // Throws infeasible_error when budget < lambda_min(H).
  void check_feasible() const;
  bool satisfied_by(const DensityMatrix& rho, double slack) const;
};

struct BoundReport {
  double value_bits = 0.0;
  DensityMatrix optimizer;
  int iterations = 0;
  double duality_gap_estimate = 0.0;
  std::optional<double> constraint_slack; // budget - Tr{H rho*}; empty if unconstrained
};

struct FrankWolfeOptions {
  int max_iterations = 500;
  double gap_tolerance = 1e-6; // bits
  int line_search_iterations = 60;
  int lmo_bisection_iterations = 80;
};

// Average output entropy sum_x w_x S(N^x(rho)) and its supergradient
// -sum_x w_x (N^x)^dag(log2 N^x(rho)), with output eigenvalues clipped at
// tol().log_clip inside the logarithm only.
double avg_output_entropy(const ChannelMixture& mix, const Matrix& rho);
Matrix avg_output_entropy_gradient(const ChannelMixture& mix, const Matrix& rho);

// Frank-Wolfe maximization of the concave objective rho -> S(N(rho)) over
// {rho >= 0, Tr rho = 1, Tr{H rho} <= E}. The linear maximization oracle
// bisects on lambda >= 0 applied to G - lambda H and mixes the two bracketing
// top eigenvectors to meet the budget exactly.
BoundReport max_output_entropy(const KrausChannel& ch, const EnergyConstraint& ec,
                               const FrankWolfeOptions& opts = {});
BoundReport max_avg_output_entropy(const ChannelMixture& mix, const EnergyConstraint& ec,
                                   const FrankWolfeOptions& opts = {});

// (n * bound_per_use + h2(eps)) / (1 - eps), the cap on log2 M implied by the
// weak-converse bound; eps must lie in [0, 1).
double feedback_rate_bound(int n, double epsilon, double bound_per_use);

double binary_entropy(double epsilon);

// (x+1) log2(x+1) - x log2 x for x >= 0: entropy of a thermal state with mean
// photon number x.
double g_function(double x);

} // namespace qfb

#endif
