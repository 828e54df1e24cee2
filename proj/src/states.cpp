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

#include "qfb/states.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qfb {

Tolerances& tol() {
  static Tolerances t;
  return t;
}

// ---- SystemLayout ------------------------------------------------------------

SystemLayout::SystemLayout(std::vector<Factor> factors) : factors_(std::move(factors)) {
  std::set<std::string> seen;
  total_dim_ = 1;
  for (const auto& f : factors_) {
    if (f.dim < 1) throw std::invalid_argument("factor '" + f.label + "' has dimension " + std::to_string(f.dim));
    if (!seen.insert(f.label).second) throw std::invalid_argument("duplicate factor label '" + f.label + "'");
    total_dim_ *= f.dim;
  }
}

bool SystemLayout::has(const std::string& label) const {
  for (const auto& f : factors_)
    if (f.label == label) return true;
  return false;
}

int SystemLayout::position(const std::string& label) const {
  for (size_t i = 0; i < factors_.size(); ++i)
    if (factors_[i].label == label) return static_cast<int>(i);
  throw std::invalid_argument("unknown factor label '" + label + "' in layout " + to_string());
}

int SystemLayout::dim_of(const std::string& label) const {
  return factors_[static_cast<size_t>(position(label))].dim;
}

std::vector<std::string> SystemLayout::labels() const {
  std::vector<std::string> out;
  out.reserve(factors_.size());
  for (const auto& f : factors_) out.push_back(f.label);
  return out;
}

int SystemLayout::stride(int i) const {
  int s = 1;
  for (size_t j = static_cast<size_t>(i) + 1; j < factors_.size(); ++j) s *= factors_[j].dim;
  return s;
}

std::vector<int> SystemLayout::positions_in_order(const std::vector<std::string>& labels) const {
  std::vector<int> pos;
  pos.reserve(labels.size());
  for (const auto& l : labels) pos.push_back(position(l));
  for (size_t i = 1; i < pos.size(); ++i)
    if (pos[i] <= pos[i - 1])
      throw std::invalid_argument("subsystem labels must be given in layout order (no implicit permutation)");
  return pos;
}

SystemLayout SystemLayout::concat(const SystemLayout& other) const {
  std::vector<Factor> all = factors_;
  all.insert(all.end(), other.factors_.begin(), other.factors_.end());
  return SystemLayout(all); // ctor rejects label collisions
}

SystemLayout SystemLayout::keep(const std::vector<int>& positions) const {
  std::vector<Factor> kept;
  kept.reserve(positions.size());
  for (int p : positions) kept.push_back(factors_[static_cast<size_t>(p)]);
  return SystemLayout(kept);
}

bool SystemLayout::operator==(const SystemLayout& other) const {
  if (factors_.size() != other.factors_.size()) return false;
  for (size_t i = 0; i < factors_.size(); ++i)
    if (factors_[i].label != other.factors_[i].label || factors_[i].dim != other.factors_[i].dim) return false;
  return true;
}

std::string SystemLayout::to_string() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < factors_.size(); ++i) {
    if (i) os << ",";
    os << factors_[i].label << ":" << factors_[i].dim;
  }
  os << "]";
  return os.str();
}

// ---- validation ----------------------------------------------------------------

double hermiticity_defect(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

void DensityMatrix::validate() const {
  if (mat.rows() != dim() || mat.cols() != dim())
    throw std::invalid_argument("density matrix shape " + std::to_string(mat.rows()) + "x" +
                                std::to_string(mat.cols()) + " does not match layout " + layout.to_string());
  if (hermiticity_defect(mat) > tol().herm)
    throw std::invalid_argument("density matrix is not Hermitian within tolerance");
  if (std::abs(mat.trace().real() - 1.0) > tol().tr || std::abs(mat.trace().imag()) > tol().tr)
    throw std::invalid_argument("density matrix trace is not 1 within tolerance");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (mat + mat.adjoint()), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol().psd)
    throw std::invalid_argument("density matrix has eigenvalue " + std::to_string(es.eigenvalues().minCoeff()) +
                                " below the PSD floor");
}

DensityMatrix DensityMatrix::validated(SystemLayout layout, Matrix mat) {
  DensityMatrix rho{std::move(layout), std::move(mat)};
  rho.validate();
  return rho;
}

void PureState::validate() const {
  if (amp.size() != dim())
    throw std::invalid_argument("pure state length does not match layout " + layout.to_string());
  if (std::abs(amp.norm() - 1.0) > tol().tr)
    throw std::invalid_argument("pure state is not normalized within tolerance");
}

DensityMatrix PureState::to_density() const {
  return DensityMatrix{layout, amp * amp.adjoint()};
}

void HermitianObservable::validate() const {
  if (mat.rows() != dim() || mat.cols() != dim())
    throw std::invalid_argument("observable shape does not match layout " + layout.to_string());
  if (hermiticity_defect(mat) > tol().herm)
    throw std::invalid_argument("observable is not Hermitian within tolerance");
}

// ---- tensor products -----------------------------------------------------------

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix{a.layout.concat(b.layout), kron(a.mat, b.mat)};
}

PureState tensor(const PureState& a, const PureState& b) {
  Vector out(a.amp.size() * b.amp.size());
  for (Eigen::Index i = 0; i < a.amp.size(); ++i)
    out.segment(i * b.amp.size(), b.amp.size()) = a.amp(i) * b.amp;
  return PureState{a.layout.concat(b.layout), out};
}

// ---- partial trace -------------------------------------------------------------

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& discard) {
  if (discard.empty()) return rho;
  std::vector<int> disc;
  for (const auto& l : discard) disc.push_back(rho.layout.position(l));
  std::sort(disc.begin(), disc.end());
  if (static_cast<int>(disc.size()) == rho.layout.size())
    throw std::invalid_argument("cannot discard every factor of " + rho.layout.to_string());

  std::vector<int> kept;
  for (int i = 0; i < rho.layout.size(); ++i)
    if (!std::binary_search(disc.begin(), disc.end(), i)) kept.push_back(i);

  const SystemLayout out_layout = rho.layout.keep(kept);
  int d_disc = 1;
  for (int p : disc) d_disc *= rho.layout.factor(p).dim;

  // Precompute full-index contributions of kept and discarded digit groups.
  const int dk = out_layout.total_dim();
  std::vector<int> kept_offsets(static_cast<size_t>(dk));
  for (int j = 0; j < dk; ++j) {
    int off = 0;
    for (size_t t = 0; t < kept.size(); ++t) {
      const int d = out_layout.factor(static_cast<int>(t)).dim;
      const int digit = (j / out_layout.stride(static_cast<int>(t))) % d;
      off += digit * rho.layout.stride(kept[t]);
    }
    kept_offsets[static_cast<size_t>(j)] = off;
  }
  std::vector<int> disc_offsets(static_cast<size_t>(d_disc));
  for (int e = 0; e < d_disc; ++e) {
    int rem = e, off = 0;
    for (size_t t = disc.size(); t-- > 0;) {
      const int d = rho.layout.factor(disc[t]).dim;
      off += (rem % d) * rho.layout.stride(disc[t]);
      rem /= d;
    }
    disc_offsets[static_cast<size_t>(e)] = off;
  }

  Matrix out = Matrix::Zero(dk, dk);
  for (int r = 0; r < dk; ++r)
    for (int c = 0; c < dk; ++c) {
      Complex acc(0, 0);
      for (int e = 0; e < d_disc; ++e)
        acc += rho.mat(kept_offsets[static_cast<size_t>(r)] + disc_offsets[static_cast<size_t>(e)],
                       kept_offsets[static_cast<size_t>(c)] + disc_offsets[static_cast<size_t>(e)]);
      out(r, c) = acc;
    }
  return DensityMatrix{out_layout, std::move(out)};
}

DensityMatrix reduce_to(const DensityMatrix& rho, const std::vector<std::string>& keep) {
  for (const auto& l : keep) rho.layout.position(l); // reject unknown labels
  if (keep.empty()) {
    Matrix one(1, 1);
    one(0, 0) = rho.mat.trace();
    return DensityMatrix{SystemLayout{}, std::move(one)};
  }
  std::set<std::string> kept(keep.begin(), keep.end());
  std::vector<std::string> discard;
  for (const auto& f : rho.layout.factors())
    if (!kept.count(f.label)) discard.push_back(f.label);
  return partial_trace(rho, discard);
}

// ---- eigendecomposition and entropies --------------------------------------------

EighResult eigh(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("eigh requires a square matrix");
  if (hermiticity_defect(m) > tol().herm)
    throw std::invalid_argument("eigh input is not Hermitian within tolerance");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  // Eigen returns ascending order; flip to descending.
  const Eigen::Index n = m.rows();
  EighResult out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = es.eigenvalues()(n - 1 - i);
    out.eigenvectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  const double resid = (out.eigenvectors * out.eigenvalues.asDiagonal() * out.eigenvectors.adjoint() - m).norm();
  if (resid > tol().eig * std::max(1.0, m.norm()))
    throw std::runtime_error("eigendecomposition reconstruction residual " + std::to_string(resid));
  return out;
}

double entropy_of_eigenvalues(const Eigen::VectorXd& lambda, int dim_for_message) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double x = lambda(i);
    if (x < -tol().psd)
      throw std::invalid_argument("entropy of a matrix with eigenvalue " + std::to_string(x) +
                                  " below the PSD floor (dim " + std::to_string(dim_for_message) + ")");
    if (x <= tol().clip) continue; // 0 log 0 := 0
    s -= x * std::log2(x);
  }
  // an eigenvalue of 1 + roundoff can leave s at -1e-16; the range is [0, log2 dim]
  return std::max(s, 0.0);
}

double von_neumann_entropy(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho.mat + rho.mat.adjoint()), Eigen::EigenvaluesOnly);
  return entropy_of_eigenvalues(es.eigenvalues(), rho.dim());
}

double entropy_of_probs(const std::vector<double>& p) {
  double s = 0.0;
  for (double x : p) {
    if (x < -tol().psd) throw std::invalid_argument("negative probability " + std::to_string(x));
    if (x <= tol().clip) continue;
    s -= x * std::log2(x);
  }
  return std::max(s, 0.0);
}

// ---- purification -------------------------------------------------------------

PureState purify(const DensityMatrix& rho, const std::string& reference_label) {
  return purify(rho, reference_label, 0);
}

PureState purify(const DensityMatrix& rho, const std::string& reference_label, int ref_dim) {
  if (rho.layout.has(reference_label))
    throw std::invalid_argument("reference label '" + reference_label + "' collides with an existing factor");
  const EighResult es = eigh(rho.mat);
  int rank = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues.size(); ++i)
    if (es.eigenvalues(i) > tol().clip) rank = static_cast<int>(i) + 1;
  rank = std::max(rank, 1);
  if (ref_dim == 0) ref_dim = rank;
  if (ref_dim < rank)
    throw std::invalid_argument("purification reference dim " + std::to_string(ref_dim) +
                                " is below the state rank " + std::to_string(rank));

  const SystemLayout out = rho.layout.concat(SystemLayout({{reference_label, ref_dim}}));
  Vector amp = Vector::Zero(out.total_dim());
  for (int i = 0; i < rank; ++i) {
    const double lam = std::max(es.eigenvalues(i), 0.0);
    for (int a = 0; a < rho.dim(); ++a) amp(a * ref_dim + i) = std::sqrt(lam) * es.eigenvectors(a, i);
  }
  return PureState{out, std::move(amp)};
}

// ---- scalar functionals -----------------------------------------------------------

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (!(rho.layout == sigma.layout))
    throw std::invalid_argument("trace_distance layout mismatch: " + rho.layout.to_string() + " vs " +
                                sigma.layout.to_string());
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho.mat + rho.mat.adjoint() - sigma.mat - sigma.mat.adjoint()),
                                           Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double expectation(const DensityMatrix& rho, const HermitianObservable& obs) {
  if (!(rho.layout == obs.layout))
    throw std::invalid_argument("expectation layout mismatch: " + rho.layout.to_string() + " vs " +
                                obs.layout.to_string());
  return (obs.mat * rho.mat).trace().real();
}

double purity(const DensityMatrix& rho) { return (rho.mat * rho.mat).trace().real(); }

Matrix psd_sqrt(const Matrix& m) {
  const EighResult es = eigh(m);
  Eigen::VectorXd roots(es.eigenvalues.size());
  for (Eigen::Index i = 0; i < es.eigenvalues.size(); ++i) {
    if (es.eigenvalues(i) < -tol().psd)
      throw std::invalid_argument("psd_sqrt of a matrix with eigenvalue " + std::to_string(es.eigenvalues(i)));
    roots(i) = std::sqrt(std::max(es.eigenvalues(i), 0.0));
  }
  return es.eigenvectors * roots.asDiagonal() * es.eigenvectors.adjoint();
}

DensityMatrix permute_factors(const DensityMatrix& rho, const std::vector<std::string>& order) {
  if (order.size() != static_cast<size_t>(rho.layout.size()))
    throw std::invalid_argument("permutation must name every factor exactly once");
  std::vector<int> src; // src[t] = position in the old layout of new factor t
  std::vector<Factor> fs;
  for (const auto& l : order) {
    src.push_back(rho.layout.position(l));
    fs.push_back(rho.layout.factor(src.back()));
  }
  const SystemLayout out_layout{fs};
  const int d = rho.dim();
  std::vector<int> map(static_cast<size_t>(d));
  for (int j = 0; j < d; ++j) {
    int old_idx = 0;
    for (size_t t = 0; t < src.size(); ++t) {
      const int digit = (j / out_layout.stride(static_cast<int>(t))) % out_layout.factor(static_cast<int>(t)).dim;
      old_idx += digit * rho.layout.stride(src[t]);
    }
    map[static_cast<size_t>(j)] = old_idx;
  }
  Matrix out(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) out(r, c) = rho.mat(map[static_cast<size_t>(r)], map[static_cast<size_t>(c)]);
  return DensityMatrix{out_layout, std::move(out)};
}

// ---- operator lifting --------------------------------------------------------------

LiftedOperator lift_operator(const SystemLayout& in, const std::vector<std::string>& on, const Matrix& op,
                             const std::vector<Factor>& out_factors) {
  if (on.empty()) throw std::invalid_argument("lift_operator needs at least one target factor");
  const std::vector<int> pos = in.positions_in_order(on);

  int d_on = 1;
  for (int p : pos) d_on *= in.factor(p).dim;
  int d_new = 1;
  for (const auto& f : out_factors) d_new *= f.dim;
  if (op.cols() != d_on || op.rows() != d_new)
    throw std::invalid_argument("operator shape " + std::to_string(op.rows()) + "x" + std::to_string(op.cols()) +
                                " does not match target dims " + std::to_string(d_new) + "x" + std::to_string(d_on));

  // Output layout: out_factors replace the subset at the slot of its first factor.
  std::vector<Factor> out_fs;
  std::vector<int> spect; // positions of untouched factors in the input layout
  {
    size_t next = 0;
    for (int i = 0; i < in.size(); ++i) {
      const bool targeted = next < pos.size() && pos[next] == i;
      if (targeted) {
        if (next == 0)
          for (const auto& f : out_factors) out_fs.push_back(f);
        ++next;
      } else {
        out_fs.push_back(in.factor(i));
        spect.push_back(i);
      }
    }
  }
  const SystemLayout out_layout{out_fs};

  // Strides of each role in the composite input/output indices.
  std::vector<int> in_spect_stride, out_spect_stride;
  for (size_t t = 0; t < spect.size(); ++t) in_spect_stride.push_back(in.stride(spect[t]));
  std::vector<int> in_on_stride;
  for (int p : pos) in_on_stride.push_back(in.stride(p));

  {
    // Match spectators to their slots in the output layout, in order.
    int slot = 0;
    size_t next = 0;
    for (int i = 0; i < in.size(); ++i) {
      const bool targeted = next < pos.size() && pos[next] == i;
      if (targeted) {
        if (next == 0) slot += static_cast<int>(out_factors.size());
        ++next;
      } else {
        out_spect_stride.push_back(out_layout.stride(slot));
        ++slot;
      }
    }
  }
  // Everything before pos[0] is a spectator, so the new factors start at slot pos[0].
  std::vector<int> out_new_stride;
  for (size_t t = 0; t < out_factors.size(); ++t)
    out_new_stride.push_back(out_layout.stride(pos[0] + static_cast<int>(t)));

  int d_spect = 1;
  for (int p : spect) d_spect *= in.factor(p).dim;

  Matrix full = Matrix::Zero(out_layout.total_dim(), in.total_dim());
  for (int m = 0; m < d_spect; ++m) {
    // Decompose the spectator multi-index once into both bases.
    int in_off = 0, out_off = 0, rem = m;
    for (size_t t = spect.size(); t-- > 0;) {
      const int d = in.factor(spect[t]).dim;
      const int digit = rem % d;
      rem /= d;
      in_off += digit * in_spect_stride[t];
      out_off += digit * out_spect_stride[t];
    }
    for (int r = 0; r < d_new; ++r) {
      int row = out_off, rr = r;
      for (size_t t = out_factors.size(); t-- > 0;) {
        const int d = out_factors[t].dim;
        row += (rr % d) * out_new_stride[t];
        rr /= d;
      }
      for (int c = 0; c < d_on; ++c) {
        const Complex v = op(r, c);
        if (v == Complex(0, 0)) continue;
        int col = in_off, cc = c;
        for (size_t t = pos.size(); t-- > 0;) {
          const int d = in.factor(pos[t]).dim;
          col += (cc % d) * in_on_stride[t];
          cc /= d;
        }
        full(row, col) = v;
      }
    }
  }
  return LiftedOperator{out_layout, std::move(full)};
}

} // namespace qfb
