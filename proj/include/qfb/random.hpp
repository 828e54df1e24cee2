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

#ifndef QFB_RANDOM_HPP
#define QFB_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qfb/states.hpp"

namespace qfb {

// splitmix64 step, used to derive independent sub-seeds from (seed, index)
// pairs so per-trial results do not depend on evaluation order.
uint64_t mix_seed(uint64_t seed, uint64_t index);
uint64_t mix_seed(uint64_t seed, const std::string& tag, uint64_t index);

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double uniform();                       // [0,1)
  double gaussian();                      // N(0,1)
  int uniform_int(int lo, int hi);        // inclusive
  Complex complex_gaussian();             // standard complex normal

  Matrix ginibre(int rows, int cols);
  // Haar-distributed isometry: rows x cols with V^dag V = I (rows >= cols).
  Matrix haar_isometry(int rows, int cols);
  Matrix haar_unitary(int n);
  Vector haar_vector(int dim);

  PureState random_pure(const SystemLayout& layout);
  // Induced-measure mixed state of the given rank (rank <= dim).
  DensityMatrix random_density(const SystemLayout& layout, int rank);
  std::vector<double> dirichlet_uniform(int k); // flat Dirichlet point on the simplex

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

} // namespace qfb

#endif
