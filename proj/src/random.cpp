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

#include "qfb/random.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace qfb {

static uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t mix_seed(uint64_t seed, uint64_t index) { return splitmix64(splitmix64(seed) ^ index); }

uint64_t mix_seed(uint64_t seed, const std::string& tag, uint64_t index) {
  uint64_t h = 1469598103934665603ULL; // FNV-1a over the tag, stable across platforms
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return splitmix64(mix_seed(seed, index) ^ h);
}

double Rng::uniform() {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  return d(engine_);
}

double Rng::gaussian() {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(engine_);
}

int Rng::uniform_int(int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  return d(engine_);
}

Complex Rng::complex_gaussian() {
  const double re = gaussian();
  const double im = gaussian();
  return Complex(re, im) / std::sqrt(2.0);
}

Matrix Rng::ginibre(int rows, int cols) {
  Matrix g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = complex_gaussian();
  return g;
}

Matrix Rng::haar_isometry(int rows, int cols) {
  if (rows < cols) throw std::invalid_argument("haar_isometry requires rows >= cols");
  const Matrix g = ginibre(rows, cols);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  // Fix the R-diagonal phases so the result is Haar, not just orthonormal.
  const Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (int j = 0; j < cols; ++j) {
    const Complex d = r(j, j);
    if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

Matrix Rng::haar_unitary(int n) { return haar_isometry(n, n); }

Vector Rng::haar_vector(int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = complex_gaussian();
  v.normalize();
  return v;
}

PureState Rng::random_pure(const SystemLayout& layout) {
  return PureState{layout, haar_vector(layout.total_dim())};
}

DensityMatrix Rng::random_density(const SystemLayout& layout, int rank) {
  const int d = layout.total_dim();
  if (rank < 1 || rank > d) throw std::invalid_argument("random_density rank out of range");
  const Matrix g = ginibre(d, rank);
  Matrix m = g * g.adjoint();
  m /= m.trace().real();
  return DensityMatrix{layout, std::move(m)};
}

std::vector<double> Rng::dirichlet_uniform(int k) {
  // Gamma(1) variates are exponentials; normalizing gives a flat Dirichlet.
  std::vector<double> w(static_cast<size_t>(k));
  double sum = 0.0;
  for (auto& x : w) {
    x = -std::log(1.0 - uniform());
    sum += x;
  }
  for (auto& x : w) x /= sum;
  return w;
}

} // namespace qfb
