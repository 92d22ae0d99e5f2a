#pragma once

// Kraus channels with local (product) structure, local filters, selective
// branches and the postselection and subspace-carving constructions.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "distillery/qstate.hpp"

namespace distillery {

struct LocalDims {
  std::size_t a = 1;
  std::size_t b = 1;
  std::size_t total() const noexcept { return a * b; }
  friend bool operator==(const LocalDims&, const LocalDims&) = default;
};

/// Operator Schmidt test: reshapes K : (a_in b_in) -> (a_out b_out) into an
/// (a_out a_in) x (b_out b_in) matrix and returns its singular values.
inline RealVector operator_schmidt_coefficients(const Matrix& k, LocalDims in, LocalDims out) {
  const auto ia = static_cast<Eigen::Index>(in.a), ib = static_cast<Eigen::Index>(in.b);
  const auto oa = static_cast<Eigen::Index>(out.a), ob = static_cast<Eigen::Index>(out.b);
  Matrix r(oa * ia, ob * ib);
  for (Eigen::Index x = 0; x < oa; ++x)
    for (Eigen::Index y = 0; y < ob; ++y)
      for (Eigen::Index u = 0; u < ia; ++u)
        for (Eigen::Index v = 0; v < ib; ++v) r(x * ia + u, y * ib + v) = k(x * ob + y, u * ib + v);
  Eigen::JacobiSVD<Matrix> svd(r);
  return svd.singularValues();
}

inline bool is_product_operator(const Matrix& k, LocalDims in, LocalDims out) {
  const RealVector s = operator_schmidt_coefficients(k, in, out);
  return s.size() < 2 || s(1) < tol::rank;
}

/// Completely positive map given by its Kraus operators. `product_form`
/// asserts that every operator factorizes as A_k (x) B_k; it is checked.
class KrausChannel {
 public:
  KrausChannel(std::vector<Matrix> kraus_ops, LocalDims in, LocalDims out, bool product_form,
               std::string provenance = {})
      : KrausChannel(std::move(kraus_ops), in, out, product_form, std::move(provenance), product_form) {}

  static KrausChannel identity(LocalDims dims) {
    const auto d = static_cast<Eigen::Index>(dims.total());
    return KrausChannel({Matrix::Identity(d, d)}, dims, dims, true, "identity");
  }

  /// Channel with Kraus operators A_k (x) B_k.
  static KrausChannel from_local_pairs(const std::vector<std::pair<Matrix, Matrix>>& pairs, std::string provenance = {}) {
    require(!pairs.empty(), ErrorCode::invalid_argument, "need at least one local pair");
    const LocalDims in{static_cast<std::size_t>(pairs.front().first.cols()),
                       static_cast<std::size_t>(pairs.front().second.cols())};
    const LocalDims out{static_cast<std::size_t>(pairs.front().first.rows()),
                        static_cast<std::size_t>(pairs.front().second.rows())};
    std::vector<Matrix> ops;
    ops.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
      require(a.rows() == static_cast<Eigen::Index>(out.a) && a.cols() == static_cast<Eigen::Index>(in.a) &&
                  b.rows() == static_cast<Eigen::Index>(out.b) && b.cols() == static_cast<Eigen::Index>(in.b),
              ErrorCode::dimension_mismatch, "local pairs must share their shapes");
      ops.push_back(detail::kron(a, b));
    }
    // Product form holds by construction.
    return KrausChannel(std::move(ops), in, out, true, std::move(provenance), false);
  }

 private:
  KrausChannel(std::vector<Matrix> kraus_ops, LocalDims in, LocalDims out, bool product_form, std::string provenance,
               bool verify_product)
      : ops_(std::move(kraus_ops)), in_(in), out_(out), product_form_(product_form),
        provenance_(std::move(provenance)) {
    require(!ops_.empty(), ErrorCode::invalid_argument, "channel needs at least one Kraus operator");
    for (const auto& k : ops_)
      require(k.rows() == static_cast<Eigen::Index>(out_.total()) && k.cols() == static_cast<Eigen::Index>(in_.total()),
              ErrorCode::dimension_mismatch, "Kraus operator shape does not match channel dimensions");
    require(hermitian_eigenvalues(completeness()).maxCoeff() <= 1.0 + tol::completeness, ErrorCode::invalid_argument,
            "Kraus operators violate sum K^dagger K <= I");
    if (verify_product)
      for (const auto& k : ops_)
        require(is_product_operator(k, in_, out_), ErrorCode::not_product_form,
                "Kraus operator declared product-form does not factorize");
  }

 public:
  const std::vector<Matrix>& kraus_ops() const noexcept { return ops_; }
  LocalDims in_dims() const noexcept { return in_; }
  LocalDims out_dims() const noexcept { return out_; }
  bool product_form() const noexcept { return product_form_; }
  const std::string& provenance() const noexcept { return provenance_; }

  Matrix completeness() const {
    const auto d = static_cast<Eigen::Index>(in_.total());
    Matrix c = Matrix::Zero(d, d);
    for (const auto& k : ops_) c += k.adjoint() * k;
    return c;
  }

  bool is_trace_preserving() const {
    const auto d = static_cast<Eigen::Index>(in_.total());
    return (completeness() - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() <= tol::completeness;
  }

 private:
  std::vector<Matrix> ops_;
  LocalDims in_;
  LocalDims out_;
  bool product_form_;
  std::string provenance_;
};

/// Pair of local operators (A, B). As a measurement element both must be
/// contractions; unnormalized filters are allowed when flagged off.
class LocalFilter {
 public:
  LocalFilter(Matrix a_op, Matrix b_op, bool measurement_element = true)
      : a_(std::move(a_op)), b_(std::move(b_op)), measurement_element_(measurement_element) {
    require(a_.size() > 0 && b_.size() > 0, ErrorCode::invalid_argument, "empty filter operator");
    if (measurement_element_) {
      require(operator_norm(a_) <= 1.0 + tol::completeness && operator_norm(b_) <= 1.0 + tol::completeness,
              ErrorCode::invalid_argument, "measurement-element filter must have operator norm <= 1");
    }
  }

  const Matrix& a_op() const noexcept { return a_; }
  const Matrix& b_op() const noexcept { return b_; }
  bool measurement_element() const noexcept { return measurement_element_; }
  LocalDims in_dims() const { return {static_cast<std::size_t>(a_.cols()), static_cast<std::size_t>(b_.cols())}; }
  LocalDims out_dims() const { return {static_cast<std::size_t>(a_.rows()), static_cast<std::size_t>(b_.rows())}; }

  static double operator_norm(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
  }

 private:
  Matrix a_;
  Matrix b_;
  bool measurement_element_;
};

/// One branch of a selective operation: its unnormalized output and weight.
struct SelectiveOutcome {
  UnnormalizedOperator state;
  double probability;

  DensityOperator normalized() const { return DensityOperator::from_unnormalized(state); }
};

namespace detail {

inline Layout output_layout(const Layout& in_layout, LocalDims in, LocalDims out) {
  if (in == out) return in_layout;
  return Layout(out.a, out.b);
}

inline void check_input_dims(const DensityOperator& rho, LocalDims in) {
  require(rho.dim_a() == in.a && rho.dim_b() == in.b, ErrorCode::dimension_mismatch,
          "state dimensions (" + std::to_string(rho.dim_a()) + "," + std::to_string(rho.dim_b()) +
              ") do not match the operation's input (" + std::to_string(in.a) + "," + std::to_string(in.b) + ")");
}

inline Matrix kraus_sum(const std::vector<Matrix>& ops, const Matrix& rho) {
  Matrix out = Matrix::Zero(ops.front().rows(), ops.front().rows());
  for (const auto& k : ops) out.noalias() += k * rho * k.adjoint();
  return 0.5 * (out + out.adjoint());
}

inline SelectiveOutcome make_outcome(Layout layout, Matrix m) {
  UnnormalizedOperator op(std::move(layout), std::move(m));
  const double p = op.weight();
  require(p > tol::zero_probability, ErrorCode::zero_probability,
          "success probability " + std::to_string(p) + " is below the 1e-12 threshold: this branch never occurs");
  return {std::move(op), p};
}

}  // namespace detail

/// sum_k K_k rho K_k^dagger for a trace-preserving channel.
inline DensityOperator apply_channel(const KrausChannel& ch, const DensityOperator& rho) {
  detail::check_input_dims(rho, ch.in_dims());
  require(ch.is_trace_preserving(), ErrorCode::not_trace_preserving, "apply_channel needs a trace-preserving channel");
  return DensityOperator(detail::output_layout(rho.layout(), ch.in_dims(), ch.out_dims()),
                         detail::kraus_sum(ch.kraus_ops(), rho.matrix()));
}

/// Success branch of a sub-normalized channel.
inline SelectiveOutcome apply_selective(const KrausChannel& branch, const DensityOperator& rho) {
  detail::check_input_dims(rho, branch.in_dims());
  return detail::make_outcome(detail::output_layout(rho.layout(), branch.in_dims(), branch.out_dims()),
                              detail::kraus_sum(branch.kraus_ops(), rho.matrix()));
}

/// (A (x) B) rho (A (x) B)^dagger and its trace.
inline SelectiveOutcome apply_selective(const LocalFilter& filter, const DensityOperator& rho) {
  detail::check_input_dims(rho, filter.in_dims());
  const Matrix k = detail::kron(filter.a_op(), filter.b_op());
  return detail::make_outcome(detail::output_layout(rho.layout(), filter.in_dims(), filter.out_dims()),
                              detail::kraus_sum({k}, rho.matrix()));
}

/// Kraus branches whose normalized output has maximal fidelity with `target`.
/// Ties within 1e-12 are all returned; branches that never occur are skipped.
inline std::vector<std::size_t> fidelity_maximizing_branches(const KrausChannel& ch, const DensityOperator& rho,
                                                             const PureState& target) {
  detail::check_input_dims(rho, ch.in_dims());
  require(target.dim_a() == ch.out_dims().a && target.dim_b() == ch.out_dims().b, ErrorCode::dimension_mismatch,
          "target state does not match the channel output");
  std::vector<double> fid(ch.kraus_ops().size(), -1.0);
  double best = -1.0;
  for (std::size_t k = 0; k < fid.size(); ++k) {
    const Matrix& K = ch.kraus_ops()[k];
    const Matrix tau = K * rho.matrix() * K.adjoint();
    const double p = tau.trace().real();
    if (p <= tol::zero_probability) continue;
    fid[k] = target.amplitudes().dot(tau * target.amplitudes()).real() / p;
    best = std::max(best, fid[k]);
  }
  require(best >= 0.0, ErrorCode::zero_probability, "no branch occurs with nonzero probability");
  std::vector<std::size_t> winners;
  for (std::size_t k = 0; k < fid.size(); ++k)
    if (fid[k] >= 0.0 && fid[k] >= best - 1e-12) winners.push_back(k);
  return winners;
}

/// Tracing out copies, written as a product-form channel.
inline KrausChannel partial_trace_channel(const Layout& layout, std::span<const std::size_t> keep_copies) {
  const std::size_t k = layout.num_copies();
  std::vector<bool> keep_copy(k, false);
  for (auto c : keep_copies) {
    require(c < k, ErrorCode::invalid_argument, "copy index out of range");
    keep_copy[c] = true;
  }
  require(!keep_copies.empty(), ErrorCode::invalid_argument, "must keep at least one copy");

  // One party at a time: maps from (kept multi-index, traced multi-index) to
  // the party's flat index.
  auto party_parts = [&](bool alice) {
    std::vector<std::size_t> dims;
    for (const auto& c : layout.copies()) dims.push_back(alice ? c.a : c.b);
    const auto strides = detail::strides_of(dims);
    std::vector<std::size_t> kept, traced;
    for (std::size_t c = 0; c < k; ++c) (keep_copy[c] ? kept : traced).push_back(c);
    return std::pair{detail::subspace_offsets(dims, strides, kept), detail::subspace_offsets(dims, strides, traced)};
  };
  const auto [a_kept, a_traced] = party_parts(true);
  const auto [b_kept, b_traced] = party_parts(false);
  const LocalDims in{layout.dim_a(), layout.dim_b()};
  const LocalDims out{a_kept.size(), b_kept.size()};

  auto local_ops = [](const std::vector<std::size_t>& kept, const std::vector<std::size_t>& traced, std::size_t dim) {
    std::vector<Matrix> ops;
    for (auto t : traced) {
      Matrix m = Matrix::Zero(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(dim));
      for (std::size_t i = 0; i < kept.size(); ++i) m(static_cast<Eigen::Index>(i), kept[i] + t) = 1.0;
      ops.push_back(std::move(m));
    }
    return ops;
  };
  std::vector<std::pair<Matrix, Matrix>> pairs;
  for (const auto& a : local_ops(a_kept, a_traced, in.a))
    for (const auto& b : local_ops(b_kept, b_traced, in.b)) pairs.emplace_back(a, b);
  auto ch = KrausChannel::from_local_pairs(pairs, "partial trace");
  require(ch.in_dims() == in && ch.out_dims() == out, ErrorCode::dimension_mismatch, "partial trace channel shape");
  return ch;
}

/// Repeat-until-success mixture after n attempts:
/// [1 - (1-p)^n] rho' + (1-p)^n tau.
inline DensityOperator postselect_compose(double p, const DensityOperator& rho_prime, const DensityOperator& tau,
                                          std::size_t n) {
  require(p > 0.0 && p <= 1.0, ErrorCode::invalid_argument, "success probability must lie in (0, 1]");
  require(n >= 1, ErrorCode::invalid_argument, "need at least one attempt");
  require(rho_prime.dim_a() == tau.dim_a() && rho_prime.dim_b() == tau.dim_b(), ErrorCode::dimension_mismatch,
          "rho' and tau must have equal dimensions");
  const double fail = std::pow(1.0 - p, static_cast<double>(n));
  return DensityOperator(rho_prime.layout(), (1.0 - fail) * rho_prime.matrix() + fail * tau.matrix());
}

/// Orthogonal projectors onto the row spaces of a filter's two operators.
/// Each operator must have numerical rank <= 2.
inline std::pair<Matrix, Matrix> support_projector(const LocalFilter& filter) {
  auto row_space = [](const Matrix& op, const char* side) {
    Eigen::JacobiSVD<Matrix> svd(op, Eigen::ComputeFullV);
    const RealVector& s = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > tol::rank) ++rank;
    require(rank <= 2, ErrorCode::rank_too_large,
            std::string(side) + " filter has rank " + std::to_string(rank) + " > 2; it does not map onto a qubit");
    const Matrix v = svd.matrixV().leftCols(rank);
    return Matrix(v * v.adjoint());
  };
  return {row_space(filter.a_op(), "Alice's"), row_space(filter.b_op(), "Bob's")};
}

// ---------------------------------------------------------------------------
// Carving |psi_d^+> into M_d qubit pairs.

struct CarveReport {
  std::size_t d;
  double omega;
  std::size_t m_d;
  std::size_t kappa;
  double success_prob;
  KrausChannel channel;  ///< success branch: T_j = Pi_j (x) Pi_j
  std::vector<std::pair<Matrix, Matrix>> failure_pairs;  ///< mismatched or leftover block outcomes

  /// Failure branch G. Built on demand: it has O(kappa^2) operators.
  KrausChannel failure_channel() const { return KrausChannel::from_local_pairs(failure_pairs, "carve: failure"); }
};

inline std::size_t carve_qubit_count(std::size_t d, double omega) {
  return static_cast<std::size_t>(std::floor(omega * std::log2(static_cast<double>(d)) + 1e-12));
}

/// kappa 2^M_d / d without building the channel.
inline double carve_success_prob(std::size_t d, double omega) {
  require(d >= 2, ErrorCode::invalid_argument, "carving needs d >= 2");
  const std::size_t block = std::size_t{1} << carve_qubit_count(d, omega);
  return static_cast<double>((d / block) * block) / static_cast<double>(d);
}

/// Splits the d-dimensional local space into kappa blocks of 2^M_d
/// dimensions, M_d = floor(omega log2 d), plus a remainder. Both parties
/// measure the block; on matching blocks j the isometry Pi_j maps it to M_d
/// local qubits.
inline CarveReport carve_pairs(std::size_t d, double omega) {
  require(d >= 2, ErrorCode::invalid_argument, "carve_pairs needs d >= 2");
  require(omega > 0.0 && omega < 1.0, ErrorCode::invalid_argument, "omega must lie in (0, 1)");
  const std::size_t m_d = carve_qubit_count(d, omega);
  require(m_d >= 1, ErrorCode::invalid_argument, "omega*log2(d) < 1: nothing to carve");
  const std::size_t block = std::size_t{1} << m_d;
  const std::size_t kappa = d / block;
  detail::check_dimension_cap(d, d);

  const auto di = static_cast<Eigen::Index>(d);
  const auto bi = static_cast<Eigen::Index>(block);
  std::vector<Matrix> isometries;  // Pi_j : C^d -> C^{2^M}
  std::vector<Matrix> projectors;  // block projectors on C^d, remainder last
  for (std::size_t j = 0; j < kappa; ++j) {
    Matrix pi = Matrix::Zero(bi, di);
    for (Eigen::Index l = 0; l < bi; ++l) pi(l, static_cast<Eigen::Index>(j * block) + l) = 1.0;
    projectors.push_back(pi.adjoint() * pi);
    isometries.push_back(std::move(pi));
  }
  if (kappa * block < d) {
    Matrix rest = Matrix::Zero(di, di);
    for (auto i = static_cast<Eigen::Index>(kappa * block); i < di; ++i) rest(i, i) = 1.0;
    projectors.push_back(std::move(rest));
  }

  std::vector<std::pair<Matrix, Matrix>> success, failure;
  // Pairs of unequal blocks, and the remainder paired with anything.
  for (const auto& pi : isometries) success.emplace_back(pi, pi);
  for (std::size_t x = 0; x < projectors.size(); ++x)
    for (std::size_t y = 0; y < projectors.size(); ++y)
      if (x != y || x >= kappa) failure.emplace_back(projectors[x], projectors[y]);
  if (failure.empty()) {
    failure.emplace_back(Matrix::Zero(di, di), Matrix::Zero(di, di));
  }

  return CarveReport{
      d,
      omega,
      m_d,
      kappa,
      static_cast<double>(kappa * block) / static_cast<double>(d),
      KrausChannel::from_local_pairs(success, "carve: matched blocks"),
      std::move(failure),
  };
}

}  // namespace distillery
