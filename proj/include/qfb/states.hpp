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

#ifndef QFB_STATES_HPP
#define QFB_STATES_HPP

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "qfb/tolerances.hpp"

namespace qfb {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// One tensor factor of a composite Hilbert space.
struct Factor {
  std::string label;
  int dim = 0;
};

// An ordered tensor factorization with unique string labels. Composite
// indices are row-major: the first factor is the most significant digit,
// matching the Kronecker product convention A (x) B -> index a*dim(B)+b.
class SystemLayout {
 public:
  SystemLayout() = default;
  explicit SystemLayout(std::vector<Factor> factors);

  int total_dim() const { return total_dim_; }
  int size() const { return static_cast<int>(factors_.size()); }
  const std::vector<Factor>& factors() const { return factors_; }
  const Factor& factor(int i) const { return factors_[static_cast<size_t>(i)]; }

  bool has(const std::string& label) const;
  int position(const std::string& label) const; // throws std::invalid_argument if absent
  int dim_of(const std::string& label) const;
  std::vector<std::string> labels() const;

  // Stride of factor i in the composite index (product of later dims).
  int stride(int i) const;

  // Positions of the given labels, required to be strictly increasing
  // (i.e. the labels are passed in layout order; nothing is permuted).
  std::vector<int> positions_in_order(const std::vector<std::string>& labels) const;

  SystemLayout concat(const SystemLayout& other) const; // throws on label collision
  SystemLayout keep(const std::vector<int>& positions) const;

  bool operator==(const SystemLayout& other) const;
  std::string to_string() const;

 private:
  std::vector<Factor> factors_;
  int total_dim_ = 1;
};

// Unit-trace PSD Hermitian matrix on a labeled tensor factorization.
struct DensityMatrix {
  SystemLayout layout;
  Matrix mat;

  int dim() const { return layout.total_dim(); }
  // Throws std::invalid_argument on shape/Hermiticity/trace/PSD defects.
  void validate() const;
  static DensityMatrix validated(SystemLayout layout, Matrix mat);
};

struct PureState {
  SystemLayout layout;
  Vector amp;

  int dim() const { return layout.total_dim(); }
  void validate() const;
  DensityMatrix to_density() const;
};

struct HermitianObservable {
  SystemLayout layout;
  Matrix mat;

  int dim() const { return layout.total_dim(); }
  void validate() const;
};

// ---- quantum-core operations ------------------------------------------------

double hermiticity_defect(const Matrix& m);

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);
PureState tensor(const PureState& a, const PureState& b);
Matrix kron(const Matrix& a, const Matrix& b);

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& discard);
DensityMatrix reduce_to(const DensityMatrix& rho, const std::vector<std::string>& keep);

struct EighResult {
  Eigen::VectorXd eigenvalues; // descending
  Matrix eigenvectors;         // columns matched to eigenvalues
};

// Hermitian eigendecomposition, eigenvalues sorted descending. Throws if the
// input's Hermiticity defect exceeds tol().herm.
EighResult eigh(const Matrix& m);

// Von Neumann entropy in bits. Eigenvalues in [-tol().psd, tol().clip] are
// treated as exact zeros; an eigenvalue below -tol().psd is an error.
double von_neumann_entropy(const DensityMatrix& rho);
double entropy_of_eigenvalues(const Eigen::VectorXd& lambda, int dim_for_message);
double entropy_of_probs(const std::vector<double>& p);

// Purification sum_i sqrt(lambda_i) |v_i> (x) |i>_ref. The reference dimension
// defaults to the numerical rank (eigenvalues above tol().clip); pass ref_dim
// >= rank to pad, which keeps layouts uniform across an ensemble.
PureState purify(const DensityMatrix& rho, const std::string& reference_label);
PureState purify(const DensityMatrix& rho, const std::string& reference_label, int ref_dim);

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);
double expectation(const DensityMatrix& rho, const HermitianObservable& obs);
double purity(const DensityMatrix& rho);

// Hermitian PSD principal square root (negative roundoff eigenvalues clipped).
Matrix psd_sqrt(const Matrix& m);

// Explicit factor reordering; `order` must name every factor exactly once.
DensityMatrix permute_factors(const DensityMatrix& rho, const std::vector<std::string>& order);

// ---- operator lifting -------------------------------------------------------

// An operator embedded into a full composite space, together with the layout
// of its output space.
struct LiftedOperator {
  SystemLayout layout; // output layout
  Matrix mat;          // (output total dim) x (input total dim)
};

// Lifts `op`, acting on the factors named in `on` (given in layout order; the
// subset need not be contiguous), to the whole space. The named factors are
// replaced, at the position of the first of them, by `out_factors`; all other
// factors are untouched. op must map the product of the `on` dims to the
// product of the `out_factors` dims. Splits, merges and dimension changes are
// all expressed by the choice of out_factors.
LiftedOperator lift_operator(const SystemLayout& in, const std::vector<std::string>& on,
                             const Matrix& op, const std::vector<Factor>& out_factors);

} // namespace qfb

#endif
