#pragma once

// Dense bipartite states: density operators, pure states and the basic
// quantities (partial trace/transpose, trace distance, fidelity, entropy).
//
// Index convention: a bipartite operator lives on H_A (x) H_B. When a state
// is built from several copies, every copy contributes one Alice factor and
// one Bob factor; all Alice factors come first (in copy order), then all Bob
// factors (in copy order). So rho_1 (x) rho_2 is indexed by
// (A_1 A_2 B_1 B_2), the ordering in which each party holds its half of
// every copy.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "distillery/config.hpp"
#include "distillery/error.hpp"

namespace distillery {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

enum class Party { alice, bob };

/// Local dimensions of one copy: Alice's factor and Bob's factor.
struct CopyDims {
  std::size_t a = 1;
  std::size_t b = 1;
  friend bool operator==(const CopyDims&, const CopyDims&) = default;
};

/// Ordered copy structure of a bipartite operator.
class Layout {
 public:
  Layout() = default;
  explicit Layout(std::vector<CopyDims> copies) : copies_(std::move(copies)) {
    require(!copies_.empty(), ErrorCode::invalid_argument, "layout needs at least one copy");
    for (const auto& c : copies_)
      require(c.a >= 1 && c.b >= 1, ErrorCode::invalid_argument, "local dimensions must be positive");
  }
  Layout(std::size_t dim_a, std::size_t dim_b) : Layout(std::vector<CopyDims>{{dim_a, dim_b}}) {}

  const std::vector<CopyDims>& copies() const noexcept { return copies_; }
  std::size_t num_copies() const noexcept { return copies_.size(); }

  std::size_t dim_a() const noexcept {
    return std::accumulate(copies_.begin(), copies_.end(), std::size_t{1},
                           [](std::size_t acc, const CopyDims& c) { return acc * c.a; });
  }
  std::size_t dim_b() const noexcept {
    return std::accumulate(copies_.begin(), copies_.end(), std::size_t{1},
                           [](std::size_t acc, const CopyDims& c) { return acc * c.b; });
  }
  std::size_t dim() const noexcept { return dim_a() * dim_b(); }

  /// Flat factor list in matrix order: a_1..a_k, b_1..b_k.
  std::vector<std::size_t> factor_dims() const {
    std::vector<std::size_t> dims;
    dims.reserve(2 * copies_.size());
    for (const auto& c : copies_) dims.push_back(c.a);
    for (const auto& c : copies_) dims.push_back(c.b);
    return dims;
  }

  friend bool operator==(const Layout&, const Layout&) = default;

 private:
  std::vector<CopyDims> copies_{{1, 1}};
};

namespace detail {

inline void check_dimension_cap(std::size_t dim_a, std::size_t dim_b) {
  const std::size_t cap = max_local_dim();
  require(dim_a <= cap && dim_b <= cap, ErrorCode::dimension_overflow,
          "local dimension " + std::to_string(std::max(dim_a, dim_b)) + " exceeds the cap of " +
              std::to_string(cap) + " (set DISTILLERY_MAX_DIM to raise it)");
}

inline std::vector<std::size_t> strides_of(const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> strides(dims.size(), 1);
  for (std::size_t f = dims.size(); f-- > 1;) strides[f - 1] = strides[f] * dims[f];
  return strides;
}

/// Offsets into the full index for every multi-index over `factors`.
inline std::vector<std::size_t> subspace_offsets(const std::vector<std::size_t>& dims,
                                                 const std::vector<std::size_t>& strides,
                                                 const std::vector<std::size_t>& factors) {
  std::size_t count = 1;
  for (auto f : factors) count *= dims[f];
  std::vector<std::size_t> offsets(count, 0);
  std::vector<std::size_t> digit(factors.size(), 0);
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < factors.size(); ++k) off += digit[k] * strides[factors[k]];
    offsets[idx] = off;
    for (std::size_t k = factors.size(); k-- > 0;) {
      if (++digit[k] < dims[factors[k]]) break;
      digit[k] = 0;
    }
  }
  return offsets;
}

/// Reduced matrix over the factors flagged in `keep` (original order retained).
inline Matrix trace_out(const Matrix& m, const std::vector<std::size_t>& dims,
                        const std::vector<bool>& keep) {
  const auto strides = strides_of(dims);
  std::vector<std::size_t> kept, traced;
  for (std::size_t f = 0; f < dims.size(); ++f) (keep[f] ? kept : traced).push_back(f);
  const auto kept_off = subspace_offsets(dims, strides, kept);
  const auto traced_off = subspace_offsets(dims, strides, traced);
  const auto n = static_cast<Eigen::Index>(kept_off.size());
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      Complex acc{0.0, 0.0};
      for (auto t : traced_off) acc += m(kept_off[i] + t, kept_off[j] + t);
      out(i, j) = acc;
    }
  return out;
}

/// Reorders tensor factors: new factor k is old factor perm[k].
inline Matrix permute_factors(const Matrix& m, const std::vector<std::size_t>& dims,
                              const std::vector<std::size_t>& perm) {
  const auto strides = strides_of(dims);
  const auto map = subspace_offsets(dims, strides, perm);
  const auto n = static_cast<Eigen::Index>(map.size());
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = m(map[i], map[j]);
  return out;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

/// Grouped-ordering tensor product of two bipartite matrices.
inline Matrix bipartite_kron(const Matrix& a, const Layout& la, const Matrix& b, const Layout& lb) {
  // kron gives (A_a.. B_a.. A_b.. B_b..); regroup into (A_a.. A_b.. B_a.. B_b..).
  const std::size_t ka = la.num_copies();
  const std::size_t kb = lb.num_copies();
  std::vector<std::size_t> dims = la.factor_dims();
  const auto db = lb.factor_dims();
  dims.insert(dims.end(), db.begin(), db.end());
  std::vector<std::size_t> perm;
  for (std::size_t i = 0; i < ka; ++i) perm.push_back(i);
  for (std::size_t i = 0; i < kb; ++i) perm.push_back(2 * ka + i);
  for (std::size_t i = 0; i < ka; ++i) perm.push_back(ka + i);
  for (std::size_t i = 0; i < kb; ++i) perm.push_back(2 * ka + kb + i);
  return permute_factors(kron(a, b), dims, perm);
}

inline Layout concat(const Layout& a, const Layout& b) {
  auto copies = a.copies();
  copies.insert(copies.end(), b.copies().begin(), b.copies().end());
  return Layout(std::move(copies));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Spectral helpers

inline double max_hermitian_defect(const Matrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

/// Ascending eigenvalues of (m + m^dagger)/2.
inline RealVector hermitian_eigenvalues(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_eigenvalue(const Matrix& m) { return hermitian_eigenvalues(m).minCoeff(); }

/// Trace norm of a Hermitian matrix: sum of absolute eigenvalues.
inline double trace_norm(const Matrix& hermitian) { return hermitian_eigenvalues(hermitian).cwiseAbs().sum(); }

// ---------------------------------------------------------------------------
// States

/// Positive semidefinite Hermitian operator with unconstrained trace, e.g. the
/// output of one branch of a selective operation. weight() is its trace.
class UnnormalizedOperator {
 public:
  UnnormalizedOperator(Layout layout, Matrix matrix) : layout_(std::move(layout)), matrix_(std::move(matrix)) {
    const auto d = static_cast<Eigen::Index>(layout_.dim());
    require(matrix_.rows() == d && matrix_.cols() == d, ErrorCode::dimension_mismatch,
            "matrix size does not match the layout");
  }

  const Layout& layout() const noexcept { return layout_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  std::size_t dim_a() const noexcept { return layout_.dim_a(); }
  std::size_t dim_b() const noexcept { return layout_.dim_b(); }
  double weight() const { return matrix_.trace().real(); }

 private:
  Layout layout_;
  Matrix matrix_;
};

class DensityOperator {
 public:
  /// Validates Hermiticity, unit trace and positivity.
  DensityOperator(Layout layout, Matrix matrix) : layout_(std::move(layout)), matrix_(std::move(matrix)) {
    detail::check_dimension_cap(layout_.dim_a(), layout_.dim_b());
    const auto d = static_cast<Eigen::Index>(layout_.dim());
    require(matrix_.rows() == d && matrix_.cols() == d, ErrorCode::dimension_mismatch,
            "matrix is " + std::to_string(matrix_.rows()) + "x" + std::to_string(matrix_.cols()) +
                ", layout needs " + std::to_string(d));
    require(max_hermitian_defect(matrix_) <= tol::hermitian, ErrorCode::invalid_state, "matrix is not Hermitian");
    require(std::abs(matrix_.trace() - Complex{1.0, 0.0}) <= tol::trace, ErrorCode::invalid_state,
            "trace differs from 1");
    require(min_eigenvalue(matrix_) >= -tol::eigen, ErrorCode::invalid_state, "matrix has a negative eigenvalue");
  }
  DensityOperator(std::size_t dim_a, std::size_t dim_b, Matrix matrix)
      : DensityOperator(Layout(dim_a, dim_b), std::move(matrix)) {}

  /// Normalizes a branch output. Fails when its weight is below the
  /// zero-probability threshold.
  static DensityOperator from_unnormalized(const UnnormalizedOperator& op) {
    const double w = op.weight();
    require(w > tol::zero_probability, ErrorCode::zero_probability, "cannot normalize a vanishing operator");
    Matrix m = op.matrix() / w;
    m = 0.5 * (m + m.adjoint());
    return DensityOperator(op.layout(), std::move(m));
  }

  static DensityOperator maximally_mixed(std::size_t dim_a, std::size_t dim_b) {
    const auto d = static_cast<Eigen::Index>(dim_a * dim_b);
    return DensityOperator(dim_a, dim_b, Matrix::Identity(d, d) / static_cast<double>(d));
  }

  const Layout& layout() const noexcept { return layout_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  std::size_t dim_a() const noexcept { return layout_.dim_a(); }
  std::size_t dim_b() const noexcept { return layout_.dim_b(); }
  std::size_t dim() const noexcept { return layout_.dim(); }
  std::size_t num_copies() const noexcept { return layout_.num_copies(); }

  /// Same matrix viewed as a single copy of (dim_a, dim_b).
  DensityOperator flattened() const { return DensityOperator(dim_a(), dim_b(), matrix_); }

 private:
  Layout layout_;
  Matrix matrix_;
};

class PureState {
 public:
  PureState(std::size_t dim_a, std::size_t dim_b, Vector amplitudes)
      : dim_a_(dim_a), dim_b_(dim_b), amplitudes_(std::move(amplitudes)) {
    require(dim_a_ >= 1 && dim_b_ >= 1, ErrorCode::invalid_argument, "local dimensions must be positive");
    require(amplitudes_.size() == static_cast<Eigen::Index>(dim_a_ * dim_b_), ErrorCode::dimension_mismatch,
            "amplitude count does not match dimensions");
    require(std::abs(amplitudes_.norm() - 1.0) <= 1e-10, ErrorCode::invalid_state, "state is not normalized");
  }

  /// Normalizes `amplitudes` first.
  static PureState normalized(std::size_t dim_a, std::size_t dim_b, const Vector& amplitudes) {
    const double n = amplitudes.norm();
    require(n > 0.0, ErrorCode::invalid_state, "zero vector");
    return PureState(dim_a, dim_b, amplitudes / n);
  }

  static PureState basis(std::size_t dim_a, std::size_t dim_b, std::size_t index) {
    require(index < dim_a * dim_b, ErrorCode::invalid_argument, "basis index out of range");
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim_a * dim_b));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return PureState(dim_a, dim_b, std::move(v));
  }

  std::size_t dim_a() const noexcept { return dim_a_; }
  std::size_t dim_b() const noexcept { return dim_b_; }
  std::size_t dim() const noexcept { return dim_a_ * dim_b_; }
  const Vector& amplitudes() const noexcept { return amplitudes_; }

  DensityOperator projector() const {
    return DensityOperator(dim_a_, dim_b_, amplitudes_ * amplitudes_.adjoint());
  }

 private:
  std::size_t dim_a_;
  std::size_t dim_b_;
  Vector amplitudes_;
};

// ---------------------------------------------------------------------------
// Operations

inline DensityOperator tensor_product(const DensityOperator& a, const DensityOperator& b) {
  detail::check_dimension_cap(a.dim_a() * b.dim_a(), a.dim_b() * b.dim_b());
  auto layout = detail::concat(a.layout(), b.layout());
  Matrix m = detail::bipartite_kron(a.matrix(), a.layout(), b.matrix(), b.layout());
  return DensityOperator(std::move(layout), std::move(m));
}

inline DensityOperator tensor_power(const DensityOperator& rho, std::size_t copies) {
  require(copies >= 1, ErrorCode::invalid_argument, "tensor power needs at least one copy");
  DensityOperator out = rho;
  for (std::size_t i = 1; i < copies; ++i) out = tensor_product(out, rho);
  return out;
}

/// Pure-state tensor product in the same grouped ordering.
inline PureState tensor_product(const PureState& a, const PureState& b) {
  const auto dims = std::vector<std::size_t>{a.dim_a(), a.dim_b(), b.dim_a(), b.dim_b()};
  Vector k = detail::kron(a.amplitudes(), b.amplitudes());
  const auto strides = detail::strides_of(dims);
  const auto map = detail::subspace_offsets(dims, strides, {0, 2, 1, 3});
  Vector out(k.size());
  for (std::size_t i = 0; i < map.size(); ++i) out(static_cast<Eigen::Index>(i)) = k(map[i]);
  return PureState(a.dim_a() * b.dim_a(), a.dim_b() * b.dim_b(), std::move(out));
}

/// Keeps the listed copies (indices into rho.layout().copies()) and traces
/// out the rest. Kept copies retain their original relative order.
inline DensityOperator partial_trace(const DensityOperator& rho, std::span<const std::size_t> keep_copies) {
  const std::size_t k = rho.num_copies();
  require(!keep_copies.empty(), ErrorCode::invalid_argument, "must keep at least one copy");
  std::vector<bool> keep_copy(k, false);
  for (auto c : keep_copies) {
    require(c < k, ErrorCode::invalid_argument, "copy index " + std::to_string(c) + " out of range");
    keep_copy[c] = true;
  }
  std::vector<bool> keep(2 * k);
  std::vector<CopyDims> copies;
  for (std::size_t c = 0; c < k; ++c) {
    keep[c] = keep[k + c] = keep_copy[c];
    if (keep_copy[c]) copies.push_back(rho.layout().copies()[c]);
  }
  Matrix m = detail::trace_out(rho.matrix(), rho.layout().factor_dims(), keep);
  return DensityOperator(Layout(std::move(copies)), 0.5 * (m + m.adjoint()));
}

inline DensityOperator partial_trace(const DensityOperator& rho, std::initializer_list<std::size_t> keep_copies) {
  return partial_trace(rho, std::span<const std::size_t>(keep_copies.begin(), keep_copies.size()));
}

/// Reduced state of one party, as a single copy with the other side trivial.
inline DensityOperator marginal(const DensityOperator& rho, Party party) {
  const std::size_t k = rho.num_copies();
  std::vector<bool> keep(2 * k, false);
  for (std::size_t c = 0; c < k; ++c) keep[party == Party::alice ? c : k + c] = true;
  Matrix m = detail::trace_out(rho.matrix(), rho.layout().factor_dims(), keep);
  m = 0.5 * (m + m.adjoint());
  if (party == Party::alice) return DensityOperator(rho.dim_a(), 1, std::move(m));
  return DensityOperator(1, rho.dim_b(), std::move(m));
}

/// Transpose on Bob's whole space.
inline Matrix partial_transpose(const Matrix& m, std::size_t dim_a, std::size_t dim_b) {
  require(m.rows() == static_cast<Eigen::Index>(dim_a * dim_b) && m.cols() == m.rows(),
          ErrorCode::dimension_mismatch, "matrix size does not match dimensions");
  Matrix out(m.rows(), m.cols());
  const auto da = static_cast<Eigen::Index>(dim_a);
  const auto db = static_cast<Eigen::Index>(dim_b);
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index j = 0; j < db; ++j)
      for (Eigen::Index k = 0; k < da; ++k)
        for (Eigen::Index l = 0; l < db; ++l) out(i * db + j, k * db + l) = m(i * db + l, k * db + j);
  return out;
}

inline Matrix partial_transpose(const DensityOperator& rho) {
  return partial_transpose(rho.matrix(), rho.dim_a(), rho.dim_b());
}

/// Smallest eigenvalue of the partial transpose; negative means entangled.
inline double ppt_min_eigenvalue(const DensityOperator& rho) { return min_eigenvalue(partial_transpose(rho)); }

inline double trace_norm_distance(const DensityOperator& a, const DensityOperator& b) {
  require(a.dim_a() == b.dim_a() && a.dim_b() == b.dim_b(), ErrorCode::dimension_mismatch,
          "trace distance needs equal dimensions");
  return trace_norm(a.matrix() - b.matrix());
}

/// <psi|rho|psi>.
inline double fidelity_pure(const PureState& psi, const DensityOperator& rho) {
  require(psi.dim_a() == rho.dim_a() && psi.dim_b() == rho.dim_b(), ErrorCode::dimension_mismatch,
          "fidelity needs equal dimensions");
  const Complex f = psi.amplitudes().dot(rho.matrix() * psi.amplitudes());
  require(std::abs(f.imag()) <= 1e-10, ErrorCode::invalid_state, "fidelity has an imaginary residue");
  return std::clamp(f.real(), 0.0, 1.0);
}

/// Entropy in bits of a probability spectrum; entries clamped to [1e-12, 1].
inline double entropy_bits(const RealVector& spectrum) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    const double p = std::clamp(spectrum(i), tol::entropy_clamp, 1.0);
    if (spectrum(i) > tol::entropy_clamp) s -= p * std::log2(p);
  }
  return std::max(0.0, s);
}

inline double von_neumann_entropy(const DensityOperator& rho) { return entropy_bits(hermitian_eigenvalues(rho.matrix())); }

/// (1/sqrt d) sum_k |kk>.
inline PureState max_entangled(std::size_t d) {
  require(d >= 2, ErrorCode::invalid_argument, "max_entangled needs d >= 2");
  detail::check_dimension_cap(d, d);
  Vector v = Vector::Zero(static_cast<Eigen::Index>(d * d));
  const double amp = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t k = 0; k < d; ++k) v(static_cast<Eigen::Index>(k * d + k)) = amp;
  return PureState(d, d, std::move(v));
}

}  // namespace distillery
